#pragma once

#include <Eigen/Core>

#include "norm/linalg.hpp"

namespace norm {

// Smallest generalized eigenpairs of a symmetric pencil (S, M), M SPD.
// Vectors are M-orthonormal, values ascending.
struct EigenPairs {
  Vector values;
  Eigen::MatrixXd vectors;  // n x k, one eigenvector per column
  int iterations = 0;
};

// Dense solve. A diagonal M is folded into a standard symmetric problem
// M^{-1/2} S M^{-1/2}; otherwise the generalized Cholesky route is used.
EigenPairs dense_smallest_eigenpairs(const SparseMatrix& s, const SparseMatrix& m, Eigen::Index k);

struct LanczosOptions {
  double shift = -1e-3;
  double tolerance = 1e-9;
  int max_iterations = 500;
  Eigen::Index block_size = 16;
  std::uint64_t seed = 0x5eed;
};

// Shift-invert block Lanczos with full M-reorthogonalisation on
// (S - shift M)^{-1} M. Converged when every wanted Ritz pair has
// ||S x - lambda M x|| <= tolerance * ||S||_1 * ||x||. Throws
// ConvergenceFailure after max_iterations block steps.
EigenPairs lanczos_smallest_eigenpairs(const SparseMatrix& s, const SparseMatrix& m, Eigen::Index k,
                                       const LanczosOptions& opts = {});

}  // namespace norm
