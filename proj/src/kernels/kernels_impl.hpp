#pragma once

// Internal declarations of the per-ISA kernel sets. Each namespace is compiled
// in its own translation unit with the matching target flags.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "norm/kernels/kernels.hpp"

#define NORM_KERNEL_DECLS                                                                        \
  void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,    \
               const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);   \
  void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,    \
               const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);   \
  double dot(const double* x, const double* y, std::size_t n);                                   \
  void axpy(std::size_t n, double alpha, const double* x, double* y);                            \
  void add_row_bias(std::size_t rows, std::size_t cols, const double* bias, double* y,           \
                    std::size_t ldy);                                                            \
  void col_sum(std::size_t rows, std::size_t cols, const double* x, std::size_t ldx,             \
               double* out);                                                                     \
  void gelu(std::size_t n, const double* x, double* y);                                          \
  void gelu_backward(std::size_t n, const double* x, double* dy);                                \
  void adam_update(std::size_t n, double* param, const double* grad, double* m, double* v,       \
                   double lr, double beta1, double beta2, double eps, double bc1, double bc2);

namespace norm::kernels {

// Cache blocking around a register-blocked panel routine, used when k is
// deeper than one slice (shallow products run the panel directly). k is cut into
// slices of depth KC; each slice of B is copied into contiguous strips of
// width NR, and C is swept in row chunks whose A slice fits in about 512 KB
// of L2 (at least MC rows). Every C entry still sums over p in ascending order,
// so results match the unblocked panel bit for bit.
template <std::size_t NR, std::size_t KC, std::size_t MC, bool TransA, class Panel>
void blocked_gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate,
                  Panel panel) {
  if (m < 4 || k <= KC || n == 0) {
    panel(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
    return;
  }
  thread_local std::vector<double> packed;
  packed.resize(std::min(KC, k) * n);
  for (std::size_t p0 = 0; p0 < k; p0 += KC) {
    const std::size_t kc = std::min(KC, k - p0);
    const bool acc = accumulate || p0 > 0;
    for (std::size_t j0 = 0; j0 < n; j0 += NR) {
      const std::size_t nw = std::min(NR, n - j0);
      double* strip = packed.data() + j0 * kc;
      for (std::size_t p = 0; p < kc; ++p) std::copy_n(b + (p0 + p) * ldb + j0, nw, strip + p * nw);
    }
    const std::size_t rows = std::max(MC, (std::size_t{64} << 10) / kc);
    for (std::size_t i0 = 0; i0 < m; i0 += rows) {
      const std::size_t mc = std::min(rows, m - i0);
      const double* ap = TransA ? a + p0 * lda + i0 : a + i0 * lda + p0;
      for (std::size_t j0 = 0; j0 < n; j0 += NR) {
        const std::size_t nw = std::min(NR, n - j0);
        panel(mc, nw, kc, ap, lda, packed.data() + j0 * kc, nw, c + i0 * ldc + j0, ldc, acc);
      }
    }
  }
}

namespace scalar { NORM_KERNEL_DECLS }
#if defined(NORM_HAVE_AVX2)
namespace avx2 { NORM_KERNEL_DECLS }
#endif
#if defined(NORM_HAVE_AVX512)
namespace avx512 { NORM_KERNEL_DECLS }
#endif
#if defined(NORM_HAVE_NEON)
namespace neon { NORM_KERNEL_DECLS }
#endif
}  // namespace norm::kernels
