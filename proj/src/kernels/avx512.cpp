// AVX-512F variants. Built with -mavx512f -mfma.

#include <immintrin.h>

#include <cmath>

#include "gelu_table.hpp"
#include "kernels_impl.hpp"

namespace norm::kernels::avx512 {
namespace {

template <bool TransA>
inline double a_at(const double* a, std::size_t lda, std::size_t i, std::size_t p) {
  return TransA ? a[p * lda + i] : a[i * lda + p];
}

template <bool TransA, int R>
inline void row_block(std::size_t i0, std::size_t n, std::size_t k, const double* a,
                      std::size_t lda, const double* b, std::size_t ldb, double* c,
                      std::size_t ldc, bool accumulate) {
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    __m512d c0[R], c1[R];
    for (int r = 0; r < R; ++r) {
      double* cr = c + (i0 + r) * ldc + j;
      c0[r] = accumulate ? _mm512_loadu_pd(cr) : _mm512_setzero_pd();
      c1[r] = accumulate ? _mm512_loadu_pd(cr + 8) : _mm512_setzero_pd();
    }
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * ldb + j;
      const __m512d b0 = _mm512_loadu_pd(bp);
      const __m512d b1 = _mm512_loadu_pd(bp + 8);
      for (int r = 0; r < R; ++r) {
        const __m512d av = _mm512_set1_pd(a_at<TransA>(a, lda, i0 + r, p));
        c0[r] = _mm512_fmadd_pd(av, b0, c0[r]);
        c1[r] = _mm512_fmadd_pd(av, b1, c1[r]);
      }
    }
    for (int r = 0; r < R; ++r) {
      double* cr = c + (i0 + r) * ldc + j;
      _mm512_storeu_pd(cr, c0[r]);
      _mm512_storeu_pd(cr + 8, c1[r]);
    }
  }
  for (; j + 8 <= n; j += 8) {
    __m512d c0[R];
    for (int r = 0; r < R; ++r)
      c0[r] = accumulate ? _mm512_loadu_pd(c + (i0 + r) * ldc + j) : _mm512_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
      const __m512d b0 = _mm512_loadu_pd(b + p * ldb + j);
      for (int r = 0; r < R; ++r)
        c0[r] = _mm512_fmadd_pd(_mm512_set1_pd(a_at<TransA>(a, lda, i0 + r, p)), b0, c0[r]);
    }
    for (int r = 0; r < R; ++r) _mm512_storeu_pd(c + (i0 + r) * ldc + j, c0[r]);
  }
  if (j < n) {
    const __mmask8 mask = static_cast<__mmask8>((1u << (n - j)) - 1u);
    __m512d c0[R];
    for (int r = 0; r < R; ++r)
      c0[r] = accumulate ? _mm512_maskz_loadu_pd(mask, c + (i0 + r) * ldc + j) : _mm512_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
      const __m512d b0 = _mm512_maskz_loadu_pd(mask, b + p * ldb + j);
      for (int r = 0; r < R; ++r)
        c0[r] = _mm512_fmadd_pd(_mm512_set1_pd(a_at<TransA>(a, lda, i0 + r, p)), b0, c0[r]);
    }
    for (int r = 0; r < R; ++r) _mm512_mask_storeu_pd(c + (i0 + r) * ldc + j, mask, c0[r]);
  }
}

template <bool TransA>
void panel(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
           const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  std::size_t i = 0;
  for (; i + 8 <= m; i += 8) row_block<TransA, 8>(i, n, k, a, lda, b, ldb, c, ldc, accumulate);
  switch (m - i) {
    case 7: row_block<TransA, 7>(i, n, k, a, lda, b, ldb, c, ldc, accumulate); break;
    case 6: row_block<TransA, 6>(i, n, k, a, lda, b, ldb, c, ldc, accumulate); break;
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
  blocked_gemm<16, 256, 64, TransA>(m, n, k, a, lda, b, ldb, c, ldc, accumulate, panel<TransA>);
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
  __m512d s0 = _mm512_setzero_pd(), s1 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), s0);
    s1 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i + 8), _mm512_loadu_pd(y + i + 8), s1);
  }
  if (i + 8 <= n) {
    s0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), s0);
    i += 8;
  }
  if (i < n) {
    const __mmask8 mask = static_cast<__mmask8>((1u << (n - i)) - 1u);
    s1 = _mm512_fmadd_pd(_mm512_maskz_loadu_pd(mask, x + i), _mm512_maskz_loadu_pd(mask, y + i), s1);
  }
  return _mm512_reduce_add_pd(_mm512_add_pd(s0, s1));
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m512d av = _mm512_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm512_storeu_pd(y + i, _mm512_add_pd(_mm512_loadu_pd(y + i), _mm512_mul_pd(av, _mm512_loadu_pd(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_row_bias(std::size_t rows, std::size_t cols, const double* bias, double* y,
                  std::size_t ldy) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* yr = y + r * ldy;
    std::size_t j = 0;
    for (; j + 8 <= cols; j += 8)
      _mm512_storeu_pd(yr + j, _mm512_add_pd(_mm512_loadu_pd(yr + j), _mm512_loadu_pd(bias + j)));
    for (; j < cols; ++j) yr[j] += bias[j];
  }
}

void col_sum(std::size_t rows, std::size_t cols, const double* x, std::size_t ldx, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * ldx;
    std::size_t j = 0;
    for (; j + 8 <= cols; j += 8)
      _mm512_storeu_pd(out + j, _mm512_add_pd(_mm512_loadu_pd(out + j), _mm512_loadu_pd(xr + j)));
    for (; j < cols; ++j) out[j] += xr[j];
  }
}

namespace {

// Phi(x) and phi(x) for 8 lanes from the piecewise tables.
inline void cdf_pdf(__m512d x, __m512d& cdf, __m512d& pdf) {
  const __m512d u = _mm512_abs_pd(x);
  const __mmask8 inside = _mm512_cmp_pd_mask(u, _mm512_set1_pd(gelu::kMax), _CMP_LT_OQ);
  const __m512d uc = _mm512_min_pd(u, _mm512_set1_pd(gelu::kMax));
  const __m512d q = _mm512_mul_pd(uc, _mm512_set1_pd(gelu::kInvHalfWidth));
  __m256i p32 = _mm512_cvttpd_epi32(_mm512_mul_pd(q, _mm512_set1_pd(0.5)));
  p32 = _mm256_min_epi32(p32, _mm256_set1_epi32(gelu::kPieces - 1));
  const __m512i piece = _mm512_cvtepi32_epi64(p32);
  const __m512d mid = _mm512_add_pd(_mm512_add_pd(_mm512_cvtepi32_pd(p32), _mm512_cvtepi32_pd(p32)),
                                    _mm512_set1_pd(1.0));
  const __m512d s = _mm512_sub_pd(q, mid);
  auto coeff = [&](const double (*tab)[gelu::kPieces], int k) {
    return _mm512_permutex2var_pd(_mm512_load_pd(tab[k]), piece, _mm512_load_pd(tab[k] + 8));
  };
  __m512d t = coeff(gelu::kTail, gelu::kDegree), d = coeff(gelu::kDensity, gelu::kDegree);
  for (int k = gelu::kDegree - 1; k >= 0; --k) {
    t = _mm512_fmadd_pd(t, s, coeff(gelu::kTail, k));
    d = _mm512_fmadd_pd(d, s, coeff(gelu::kDensity, k));
  }
  const __mmask8 neg = _mm512_cmp_pd_mask(x, _mm512_setzero_pd(), _CMP_LT_OQ);
  const __m512d one = _mm512_set1_pd(1.0);
  cdf = _mm512_mask_blend_pd(neg, _mm512_sub_pd(one, t), t);
  cdf = _mm512_mask_blend_pd(inside, _mm512_mask_blend_pd(neg, one, _mm512_setzero_pd()), cdf);
  pdf = _mm512_maskz_mov_pd(inside, d);
}

}  // namespace

void gelu(std::size_t n, const double* x, double* y) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m512d xv = _mm512_loadu_pd(x + i);
    __m512d cdf, pdf;
    cdf_pdf(xv, cdf, pdf);
    _mm512_storeu_pd(y + i, _mm512_mul_pd(xv, cdf));
  }
  for (; i < n; ++i) y[i] = x[i] * gelu::eval(x[i]).cdf;
}

void gelu_backward(std::size_t n, const double* x, double* dy) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m512d xv = _mm512_loadu_pd(x + i);
    __m512d cdf, pdf;
    cdf_pdf(xv, cdf, pdf);
    _mm512_storeu_pd(dy + i, _mm512_mul_pd(_mm512_loadu_pd(dy + i), _mm512_fmadd_pd(xv, pdf, cdf)));
  }
  for (; i < n; ++i) {
    const auto e = gelu::eval(x[i]);
    dy[i] *= std::fma(x[i], e.pdf, e.cdf);
  }
}

void adam_update(std::size_t n, double* param, const double* grad, double* m, double* v, double lr,
                 double beta1, double beta2, double eps, double bc1, double bc2) {
  const __m512d b1 = _mm512_set1_pd(beta1), nb1 = _mm512_set1_pd(1.0 - beta1);
  const __m512d b2 = _mm512_set1_pd(beta2), nb2 = _mm512_set1_pd(1.0 - beta2);
  const __m512d c1 = _mm512_set1_pd(bc1), c2 = _mm512_set1_pd(bc2);
  const __m512d lrv = _mm512_set1_pd(lr), epsv = _mm512_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m512d g = _mm512_loadu_pd(grad + i);
    const __m512d mi = _mm512_add_pd(_mm512_mul_pd(b1, _mm512_loadu_pd(m + i)), _mm512_mul_pd(nb1, g));
    const __m512d vi = _mm512_add_pd(_mm512_mul_pd(b2, _mm512_loadu_pd(v + i)),
                                     _mm512_mul_pd(nb2, _mm512_mul_pd(g, g)));
    _mm512_storeu_pd(m + i, mi);
    _mm512_storeu_pd(v + i, vi);
    const __m512d mhat = _mm512_div_pd(mi, c1);
    const __m512d vhat = _mm512_div_pd(vi, c2);
    const __m512d step = _mm512_div_pd(_mm512_mul_pd(lrv, mhat), _mm512_add_pd(_mm512_sqrt_pd(vhat), epsv));
    _mm512_storeu_pd(param + i, _mm512_sub_pd(_mm512_loadu_pd(param + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g * g);
    param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

}  // namespace norm::kernels::avx512
