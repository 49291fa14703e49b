#include "norm/spectral/eigensolver.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <random>

#include "norm/error.hpp"

namespace norm {
namespace {

bool diagonal_only(const SparseMatrix& m) {
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) return false;
  return true;
}

double norm1(const SparseMatrix& s) {
  double best = 0.0;
  for (Eigen::Index k = 0; k < s.outerSize(); ++k) {
    double col = 0.0;
    for (SparseMatrix::InnerIterator it(s, k); it; ++it) col += std::abs(it.value());
    best = std::max(best, col);
  }
  return best;
}

}  // namespace

EigenPairs dense_smallest_eigenpairs(const SparseMatrix& s, const SparseMatrix& m, Eigen::Index k) {
  const Eigen::Index n = s.rows();
  require(m.rows() == n && s.cols() == n && m.cols() == n, ErrorKind::DimensionMismatch,
          "stiffness and mass dimensions differ");
  require(k >= 1 && k <= n, ErrorKind::DimensionMismatch, "requested mode count outside [1, n_x]");
  EigenPairs out;
  const Eigen::MatrixXd sd = Eigen::MatrixXd(s);
  if (diagonal_only(m)) {
    const Vector d = m.diagonal();
    require((d.array() > 0.0).all(), ErrorKind::DimensionMismatch, "mass matrix must be positive");
    const Vector dinv = d.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd a = dinv.asDiagonal() * sd * dinv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    require(es.info() == Eigen::Success, ErrorKind::ConvergenceFailure, "dense eigensolver failed");
    out.values = es.eigenvalues().head(k);
    out.vectors = dinv.asDiagonal() * es.eigenvectors().leftCols(k);
  } else {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sd, Eigen::MatrixXd(m));
    require(es.info() == Eigen::Success, ErrorKind::ConvergenceFailure, "dense eigensolver failed");
    out.values = es.eigenvalues().head(k);
    out.vectors = es.eigenvectors().leftCols(k);
  }
  return out;
}

EigenPairs lanczos_smallest_eigenpairs(const SparseMatrix& s, const SparseMatrix& m, Eigen::Index k,
                                       const LanczosOptions& opts) {
  const Eigen::Index n = s.rows();
  require(m.rows() == n && s.cols() == n && m.cols() == n, ErrorKind::DimensionMismatch,
          "stiffness and mass dimensions differ");
  require(k >= 1 && k <= n, ErrorKind::DimensionMismatch, "requested mode count outside [1, n_x]");

  const SparseMatrix shifted = s - opts.shift * m;
  Eigen::SimplicialLDLT<SparseMatrix> solver(shifted);
  require(solver.info() == Eigen::Success, ErrorKind::ConvergenceFailure,
          "factorisation of the shifted operator failed");

  const double s_norm = norm1(s);
  const Eigen::Index b = std::min<Eigen::Index>(std::max<Eigen::Index>(opts.block_size, 1), n);

  Eigen::MatrixXd q(n, std::min<Eigen::Index>(n, 4 * b));
  Eigen::MatrixXd mq(n, q.cols());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(q.cols(), q.cols());
  Eigen::Index used = 0;

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  auto random_vector = [&] {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
  };

  auto ensure_capacity = [&](Eigen::Index need) {
    if (need <= q.cols()) return;
    const Eigen::Index cap = std::min<Eigen::Index>(n, std::max(need, 2 * q.cols()));
    q.conservativeResize(Eigen::NoChange, cap);
    mq.conservativeResize(Eigen::NoChange, cap);
    Eigen::MatrixXd hn = Eigen::MatrixXd::Zero(cap, cap);
    hn.topLeftCorner(h.rows(), h.cols()) = h;
    h.swap(hn);
  };

  // Appends the M-orthonormalised columns of w; returns how many survived.
  auto append_block = [&](Eigen::MatrixXd w) {
    Eigen::Index added = 0;
    for (Eigen::Index c = 0; c < w.cols() && used < n; ++c) {
      Eigen::VectorXd v = w.col(c);
      for (int attempt = 0; attempt < 3; ++attempt) {
        const double before = std::sqrt(std::max(0.0, v.dot(m * v)));
        for (int pass = 0; pass < 2; ++pass) {
          if (used > 0) v -= q.leftCols(used) * (mq.leftCols(used).transpose() * v);
        }
        const Eigen::VectorXd mv = m * v;
        const double nrm = std::sqrt(std::max(0.0, v.dot(mv)));
        if (nrm > 1e-10 * std::max(before, 1e-300)) {
          ensure_capacity(used + 1);
          q.col(used) = v / nrm;
          mq.col(used) = mv / nrm;
          ++used;
          ++added;
          break;
        }
        // Direction already spanned: restart it from noise.
        v = random_vector();
      }
    }
    return added;
  };

  {
    Eigen::MatrixXd start(n, b);
    for (Eigen::Index c = 0; c < b; ++c) start.col(c) = random_vector();
    append_block(start);
  }

  Eigen::Index block_begin = 0;
  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    const Eigen::Index block_end = used;
    const Eigen::Index width = block_end - block_begin;
    Eigen::MatrixXd w(n, width);
    for (Eigen::Index c = 0; c < width; ++c) w.col(c) = solver.solve(mq.col(block_begin + c));

    const Eigen::MatrixXd proj = mq.leftCols(block_end).transpose() * w;
    h.block(0, block_begin, block_end, width) = proj;
    h.block(block_begin, 0, width, block_end) = proj.transpose();

    if (block_end >= std::min<Eigen::Index>(n, k + b) || block_end == n) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.topLeftCorner(block_end, block_end));
      // Largest theta <-> smallest lambda; eigenvalues come ascending.
      const Eigen::Index want = std::min(k, block_end);
      Eigen::MatrixXd y(block_end, want);
      Vector lambda(want);
      for (Eigen::Index i = 0; i < want; ++i) {
        const Eigen::Index col = block_end - 1 - i;
        y.col(i) = es.eigenvectors().col(col);
        lambda(i) = opts.shift + 1.0 / es.eigenvalues()(col);
      }
      if (want == k) {
        const Eigen::MatrixXd x = q.leftCols(block_end) * y;
        bool converged = true;
        for (Eigen::Index i = 0; i < k && converged; ++i) {
          const Eigen::VectorXd xi = x.col(i);
          const double r = (s * xi - lambda(i) * (m * xi)).norm();
          converged = r <= opts.tolerance * s_norm * xi.norm();
        }
        if (converged) {
          EigenPairs out;
          out.values = lambda;
          out.vectors = x;
          out.iterations = iter;
          return out;
        }
      }
      if (block_end == n)
        fail(ErrorKind::ConvergenceFailure, "Krylov space exhausted before the Ritz pairs converged");
    }

    block_begin = block_end;
    if (append_block(w) == 0)
      fail(ErrorKind::ConvergenceFailure, "Lanczos breakdown: no new directions");
  }
  fail(ErrorKind::ConvergenceFailure,
       "shift-invert Lanczos did not converge in " + std::to_string(opts.max_iterations) + " block steps");
}

}  // namespace norm
