#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstddef>

namespace norm {

// Row-major storage matches the nodes x channels layout of fields and the
// file formats, and lets the SIMD kernels stream rows directly.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class Trans { No, Yes };

// c = op(a) * op(b), or c += op(a) * op(b) when accumulate is set. Dispatches
// to the active SIMD kernel table; c is resized when not accumulating.
void matmul(const Matrix& a, Trans ta, const Matrix& b, Trans tb, Matrix& c,
            bool accumulate = false);

inline Matrix matmul(const Matrix& a, Trans ta, const Matrix& b, Trans tb) {
  Matrix c;
  matmul(a, ta, b, tb, c);
  return c;
}

// Row-major GEMM on strided storage: c = op(a) * b, or c += when accumulating.
// op(a) is m x k; a is k x m when ta is Yes. b is k x n.
void gemm(Trans ta, std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);

bool all_finite(const Matrix& m);

}  // namespace norm
