#pragma once

// Dense float64 inner loops used by the spectral encoder/decoder, the
// pointwise maps and the optimizer. Every routine exists as a scalar
// reference plus SIMD variants (AVX2+FMA, AVX-512, NEON); one table is picked
// at runtime from the CPU features and can be overridden with NORM_SIMD.
//
// All matrices are row-major with explicit leading dimensions.

#include <cstddef>
#include <string_view>
#include <vector>

namespace norm::kernels {

enum class Isa { Scalar, Avx2, Avx512, Neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;

  // C[m x n] = (accumulate ? C : 0) + A[m x k] * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);

  // C[m x n] = (accumulate ? C : 0) + A[k x m]^T * B[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);

  double (*dot)(const double* x, const double* y, std::size_t n);

  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);

  // y[r, :] += bias for every row r
  void (*add_row_bias)(std::size_t rows, std::size_t cols, const double* bias, double* y,
                       std::size_t ldy);

  // out[c] += sum_r x[r, c]
  void (*col_sum)(std::size_t rows, std::size_t cols, const double* x, std::size_t ldx, double* out);

  // y = x Phi(x), Phi the standard normal CDF (exact GELU).
  void (*gelu)(std::size_t n, const double* x, double* y);

  // dy *= Phi(x) + x phi(x)
  void (*gelu_backward)(std::size_t n, const double* x, double* dy);

  // Bias-corrected Adam update; bc1 = 1 - beta1^t, bc2 = 1 - beta2^t.
  void (*adam_update)(std::size_t n, double* param, const double* grad, double* m, double* v,
                      double lr, double beta1, double beta2, double eps, double bc1, double bc2);
};

const KernelTable& scalar_table();

// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* table_for(Isa isa);

// Variants runnable on this machine, scalar first.
std::vector<Isa> available();

// The dispatched table. Chosen on first use: NORM_SIMD=scalar|avx2|avx512|neon
// forces a variant, otherwise the widest available one wins.
const KernelTable& active();

// Replaces the dispatched table (tests and the --simd CLI flag). Throws if the
// variant is unavailable.
void select(Isa isa);

bool parse_isa(std::string_view name, Isa& out);

}  // namespace norm::kernels
