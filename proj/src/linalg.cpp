#include "norm/linalg.hpp"

#include <algorithm>

#include "norm/error.hpp"
#include "norm/kernels/kernels.hpp"

namespace norm {

void matmul(const Matrix& a, Trans ta, const Matrix& b, Trans tb, Matrix& c, bool accumulate) {
  const auto m = static_cast<std::size_t>(ta == Trans::No ? a.rows() : a.cols());
  const auto k = static_cast<std::size_t>(ta == Trans::No ? a.cols() : a.rows());
  const auto kb = static_cast<std::size_t>(tb == Trans::No ? b.rows() : b.cols());
  const auto n = static_cast<std::size_t>(tb == Trans::No ? b.cols() : b.rows());
  require(k == kb, ErrorKind::DimensionMismatch, "matmul inner dimensions differ");
  if (accumulate) {
    require(static_cast<std::size_t>(c.rows()) == m && static_cast<std::size_t>(c.cols()) == n,
            ErrorKind::DimensionMismatch, "matmul accumulator has the wrong shape");
  } else {
    c.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  }
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) c.setZero();
    return;
  }

  const auto& kt = kernels::active();
  // op(b) must be row-major k x n for both kernels.
  Matrix bt;
  const Matrix* bp = &b;
  if (tb == Trans::Yes) {
    bt = b.transpose();
    bp = &bt;
  }
  if (ta == Trans::No) {
    kt.gemm_nn(m, n, k, a.data(), static_cast<std::size_t>(a.cols()), bp->data(),
               static_cast<std::size_t>(bp->cols()), c.data(), n, accumulate);
  } else {
    kt.gemm_tn(m, n, k, a.data(), static_cast<std::size_t>(a.cols()), bp->data(),
               static_cast<std::size_t>(bp->cols()), c.data(), n, accumulate);
  }
}

void gemm(Trans ta, std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate)
      for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, 0.0);
    return;
  }
  const auto& kt = kernels::active();
  if (ta == Trans::No)
    kt.gemm_nn(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
  else
    kt.gemm_tn(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace norm
