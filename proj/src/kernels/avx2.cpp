// AVX2 + FMA variants. Built with -mavx2 -mfma; only reached after the
// dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <cmath>

#include "gelu_table.hpp"
#include "kernels_impl.hpp"

namespace norm::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sw = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sw));
}

template <bool TransA>
inline double a_at(const double* a, std::size_t lda, std::size_t i, std::size_t p) {
  return TransA ? a[p * lda + i] : a[i * lda + p];
}

// R rows of C, all columns. 8-wide column panels, then 4-wide, then scalar.
template <bool TransA, int R>
inline void row_block(std::size_t i0, std::size_t n, std::size_t k, const double* a,
                      std::size_t lda, const double* b, std::size_t ldb, double* c,
                      std::size_t ldc, bool accumulate) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d c0[R], c1[R];
    for (int r = 0; r < R; ++r) {
      double* cr = c + (i0 + r) * ldc + j;
      c0[r] = accumulate ? _mm256_loadu_pd(cr) : _mm256_setzero_pd();
      c1[r] = accumulate ? _mm256_loadu_pd(cr + 4) : _mm256_setzero_pd();
    }
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * ldb + j;
      const __m256d b0 = _mm256_loadu_pd(bp);
      const __m256d b1 = _mm256_loadu_pd(bp + 4);
      for (int r = 0; r < R; ++r) {
        const __m256d av = _mm256_set1_pd(a_at<TransA>(a, lda, i0 + r, p));
        c0[r] = _mm256_fmadd_pd(av, b0, c0[r]);
        c1[r] = _mm256_fmadd_pd(av, b1, c1[r]);
      }
    }
    for (int r = 0; r < R; ++r) {
      double* cr = c + (i0 + r) * ldc + j;
      _mm256_storeu_pd(cr, c0[r]);
      _mm256_storeu_pd(cr + 4, c1[r]);
    }
  }
  for (; j + 4 <= n; j += 4) {
    __m256d c0[R];
    for (int r = 0; r < R; ++r)
      c0[r] = accumulate ? _mm256_loadu_pd(c + (i0 + r) * ldc + j) : _mm256_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d b0 = _mm256_loadu_pd(b + p * ldb + j);
      for (int r = 0; r < R; ++r)
        c0[r] = _mm256_fmadd_pd(_mm256_set1_pd(a_at<TransA>(a, lda, i0 + r, p)), b0, c0[r]);
    }
    for (int r = 0; r < R; ++r) _mm256_storeu_pd(c + (i0 + r) * ldc + j, c0[r]);
  }
  for (; j < n; ++j) {
    for (int r = 0; r < R; ++r) {
      double s = accumulate ? c[(i0 + r) * ldc + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s = std::fma(a_at<TransA>(a, lda, i0 + r, p), b[p * ldb + j], s);
      c[(i0 + r) * ldc + j] = s;
    }
  }
}

template <bool TransA>
void panel(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
           const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  std::size_t i = 0;
  for (; i + 6 <= m; i += 6) row_block<TransA, 6>(i, n, k, a, lda, b, ldb, c, ldc, accumulate);
  switch (m - i) {
    case 5: row_block<TransA, 5>(i, n, k, a, lda, b, ldb, c, ldc, accumulate); break;
    case 4: row_block<TransA, 4>(i, n, k, a, lda, b, ldb, c, ldc, accumulate); break;
    case 3: row_block<TransA, 3>(i, n, k, a, lda, b, ldb, c, ldc, accumulate); break;
    case 2: row_block<TransA, 2>(i, n, k, a, lda, b, ldb, c, ldc, accumulate); break;
    case 1: row_block<TransA, 1>(i, n, k, a, lda, b, ldb, c, ldc, accumulate); break;
    default: break;
  }
}

template <bool TransA>
void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  if (!TransA && n == 1 && ldb == 1) {
    for (std::size_t i = 0; i < m; ++i) {
      const double s = dot(a + i * lda, b, k);
      c[i * ldc] = accumulate ? c[i * ldc] + s : s;
    }
    return;
  }
  blocked_gemm<8, 256, 64, TransA>(m, n, k, a, lda, b, ldb, c, ldc, accumulate, panel<TransA>);
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  gemm<false>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  gemm<true>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), s3);
  }
  for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

// The elementwise kernels below avoid FMA so they round exactly like the
// scalar reference.
void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(av, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_row_bias(std::size_t rows, std::size_t cols, const double* bias, double* y,
                  std::size_t ldy) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* yr = y + r * ldy;
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4)
      _mm256_storeu_pd(yr + j, _mm256_add_pd(_mm256_loadu_pd(yr + j), _mm256_loadu_pd(bias + j)));
    for (; j < cols; ++j) yr[j] += bias[j];
  }
}

void col_sum(std::size_t rows, std::size_t cols, const double* x, std::size_t ldx, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * ldx;
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4)
      _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_loadu_pd(xr + j)));
    for (; j < cols; ++j) out[j] += xr[j];
  }
}

namespace {

// Phi(x) and phi(x) for 4 lanes from the piecewise tables.
inline void cdf_pdf(__m256d x, __m256d& cdf, __m256d& pdf) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d u = _mm256_andnot_pd(sign, x);
  const __m256d inside = _mm256_cmp_pd(u, _mm256_set1_pd(gelu::kMax), _CMP_LT_OQ);
  const __m256d uc = _mm256_min_pd(u, _mm256_set1_pd(gelu::kMax));
  const __m256d q = _mm256_mul_pd(uc, _mm256_set1_pd(gelu::kInvHalfWidth));
  __m128i p32 = _mm256_cvttpd_epi32(_mm256_mul_pd(q, _mm256_set1_pd(0.5)));
  p32 = _mm_min_epi32(p32, _mm_set1_epi32(gelu::kPieces - 1));
  const __m256d pd = _mm256_cvtepi32_pd(p32);
  const __m256d s = _mm256_sub_pd(q, _mm256_add_pd(_mm256_add_pd(pd, pd), _mm256_set1_pd(1.0)));
  auto coeff = [&](const double (*tab)[gelu::kPieces], int k) { return _mm256_i32gather_pd(tab[k], p32, 8); };
  __m256d t = coeff(gelu::kTail, gelu::kDegree), d = coeff(gelu::kDensity, gelu::kDegree);
  for (int k = gelu::kDegree - 1; k >= 0; --k) {
    t = _mm256_fmadd_pd(t, s, coeff(gelu::kTail, k));
    d = _mm256_fmadd_pd(d, s, coeff(gelu::kDensity, k));
  }
  const __m256d neg = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LT_OQ);
  const __m256d one = _mm256_set1_pd(1.0);
  cdf = _mm256_blendv_pd(_mm256_sub_pd(one, t), t, neg);
  cdf = _mm256_blendv_pd(_mm256_blendv_pd(one, _mm256_setzero_pd(), neg), cdf, inside);
  pdf = _mm256_and_pd(d, inside);
}

}  // namespace

void gelu(std::size_t n, const double* x, double* y) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    __m256d cdf, pdf;
    cdf_pdf(xv, cdf, pdf);
    _mm256_storeu_pd(y + i, _mm256_mul_pd(xv, cdf));
  }
  for (; i < n; ++i) y[i] = x[i] * gelu::eval(x[i]).cdf;
}

void gelu_backward(std::size_t n, const double* x, double* dy) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    __m256d cdf, pdf;
    cdf_pdf(xv, cdf, pdf);
    _mm256_storeu_pd(dy + i, _mm256_mul_pd(_mm256_loadu_pd(dy + i), _mm256_fmadd_pd(xv, pdf, cdf)));
  }
  for (; i < n; ++i) {
    const auto e = gelu::eval(x[i]);
    dy[i] *= std::fma(x[i], e.pdf, e.cdf);
  }
}

void adam_update(std::size_t n, double* param, const double* grad, double* m, double* v, double lr,
                 double beta1, double beta2, double eps, double bc1, double bc2) {
  const __m256d b1 = _mm256_set1_pd(beta1), nb1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d b2 = _mm256_set1_pd(beta2), nb2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d c1 = _mm256_set1_pd(bc1), c2 = _mm256_set1_pd(bc2);
  const __m256d lrv = _mm256_set1_pd(lr), epsv = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(nb1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(nb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, c1);
    const __m256d vhat = _mm256_div_pd(vi, c2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lrv, mhat), _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g * g);
    param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

}  // namespace norm::kernels::avx2
