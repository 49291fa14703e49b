// AArch64 NEON variants (float64x2). Compiled only on ARM64 targets.

#include <arm_neon.h>

#include <cmath>

#include "gelu_table.hpp"
#include "kernels_impl.hpp"

namespace norm::kernels::neon {
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
  for (; j + 8 <= n; j += 8) {
    float64x2_t acc[R][4];
    for (int r = 0; r < R; ++r)
      for (int q = 0; q < 4; ++q)
        acc[r][q] = accumulate ? vld1q_f64(c + (i0 + r) * ldc + j + 2 * q) : vdupq_n_f64(0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * ldb + j;
      float64x2_t bv[4] = {vld1q_f64(bp), vld1q_f64(bp + 2), vld1q_f64(bp + 4), vld1q_f64(bp + 6)};
      for (int r = 0; r < R; ++r) {
        const float64x2_t av = vdupq_n_f64(a_at<TransA>(a, lda, i0 + r, p));
        for (int q = 0; q < 4; ++q) acc[r][q] = vfmaq_f64(acc[r][q], av, bv[q]);
      }
    }
    for (int r = 0; r < R; ++r)
      for (int q = 0; q < 4; ++q) vst1q_f64(c + (i0 + r) * ldc + j + 2 * q, acc[r][q]);
  }
  for (; j + 2 <= n; j += 2) {
    float64x2_t acc[R];
    for (int r = 0; r < R; ++r)
      acc[r] = accumulate ? vld1q_f64(c + (i0 + r) * ldc + j) : vdupq_n_f64(0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const float64x2_t bv = vld1q_f64(b + p * ldb + j);
      for (int r = 0; r < R; ++r)
        acc[r] = vfmaq_f64(acc[r], vdupq_n_f64(a_at<TransA>(a, lda, i0 + r, p)), bv);
    }
    for (int r = 0; r < R; ++r) vst1q_f64(c + (i0 + r) * ldc + j, acc[r]);
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
  for (; i + 4 <= m; i += 4) row_block<TransA, 4>(i, n, k, a, lda, b, ldb, c, ldc, accumulate);
  switch (m - i) {
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
  float64x2_t s0 = vdupq_n_f64(0.0), s1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 = vfmaq_f64(s0, vld1q_f64(x + i), vld1q_f64(y + i));
    s1 = vfmaq_f64(s1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(s0, s1));
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(av, vld1q_f64(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_row_bias(std::size_t rows, std::size_t cols, const double* bias, double* y,
                  std::size_t ldy) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* yr = y + r * ldy;
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) vst1q_f64(yr + j, vaddq_f64(vld1q_f64(yr + j), vld1q_f64(bias + j)));
    for (; j < cols; ++j) yr[j] += bias[j];
  }
}

void col_sum(std::size_t rows, std::size_t cols, const double* x, std::size_t ldx, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * ldx;
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) vst1q_f64(out + j, vaddq_f64(vld1q_f64(out + j), vld1q_f64(xr + j)));
    for (; j < cols; ++j) out[j] += xr[j];
  }
}

// No gather on NEON: the polynomial runs per lane.
void gelu(std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * gelu::eval(x[i]).cdf;
}

void gelu_backward(std::size_t n, const double* x, double* dy) {
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = gelu::eval(x[i]);
    dy[i] *= std::fma(x[i], e.pdf, e.cdf);
  }
}

void adam_update(std::size_t n, double* param, const double* grad, double* m, double* v, double lr,
                 double beta1, double beta2, double eps, double bc1, double bc2) {
  const float64x2_t b1 = vdupq_n_f64(beta1), nb1 = vdupq_n_f64(1.0 - beta1);
  const float64x2_t b2 = vdupq_n_f64(beta2), nb2 = vdupq_n_f64(1.0 - beta2);
  const float64x2_t c1 = vdupq_n_f64(bc1), c2 = vdupq_n_f64(bc2);
  const float64x2_t lrv = vdupq_n_f64(lr), epsv = vdupq_n_f64(eps);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t g = vld1q_f64(grad + i);
    const float64x2_t mi = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + i)), vmulq_f64(nb1, g));
    const float64x2_t vi = vaddq_f64(vmulq_f64(b2, vld1q_f64(v + i)), vmulq_f64(nb2, vmulq_f64(g, g)));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    const float64x2_t step = vdivq_f64(vmulq_f64(lrv, vdivq_f64(mi, c1)),
                                       vaddq_f64(vsqrtq_f64(vdivq_f64(vi, c2)), epsv));
    vst1q_f64(param + i, vsubq_f64(vld1q_f64(param + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g * g);
    param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

}  // namespace norm::kernels::neon
