#include "norm/spectral/basis.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>

#include "norm/error.hpp"
#include "norm/kernels/kernels.hpp"
#include "norm/spectral/eigensolver.hpp"

namespace norm {

const char* to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::LBO: return "lbo";
    case BasisKind::POD: return "pod";
    case BasisKind::Fourier: return "fourier";
  }
  return "unknown";
}

SpectralBasis::SpectralBasis(BasisKind kind, Matrix modes, Vector values, Digest source_id, Vector mean)
    : kind_(kind), modes_(std::move(modes)), values_(std::move(values)), source_id_(source_id), mean_(std::move(mean)) {
  require(values_.size() == modes_.cols(), ErrorKind::DimensionMismatch, "one value per mode expected");
  require(mean_.size() == 0 || mean_.size() == modes_.rows(), ErrorKind::DimensionMismatch,
          "mean field has the wrong length");
  pinv_ = pseudo_inverse(modes_);
}

SpectralBasis::SpectralBasis(BasisKind kind, Matrix modes, Vector values, Matrix pinv, Digest source_id, Vector mean)
    : kind_(kind),
      modes_(std::move(modes)),
      values_(std::move(values)),
      pinv_(std::move(pinv)),
      source_id_(source_id),
      mean_(std::move(mean)) {
  require(values_.size() == modes_.cols() && pinv_.rows() == modes_.cols() && pinv_.cols() == modes_.rows(),
          ErrorKind::DimensionMismatch, "inconsistent basis shapes");
}

SpectralBasis SpectralBasis::truncated(Eigen::Index k) const {
  require(k >= 1 && k <= size(), ErrorKind::InvalidModeCount, "truncation outside [1, d_m]");
  return SpectralBasis(kind_, modes_.leftCols(k), values_.head(k), source_id_, mean_);
}

Matrix pseudo_inverse(const Matrix& phi) {
  require(phi.cols() >= 1 && phi.rows() >= phi.cols(), ErrorKind::RankDeficient,
          "pseudo-inverse needs at least as many rows as columns");
  const Eigen::MatrixXd gram = Eigen::MatrixXd(phi.transpose() * phi);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    fail(ErrorKind::RankDeficient, "Gram matrix is singular or has condition number above 1e12");
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  require(llt.info() == Eigen::Success, ErrorKind::RankDeficient, "Gram matrix is not positive definite");
  const Eigen::MatrixXd pt = llt.solve(Eigen::MatrixXd(phi.transpose()));
  return Matrix(pt);
}

Matrix encode(const SpectralBasis& basis, const Field& v) {
  require(v.nodes() == basis.nodes(), ErrorKind::DimensionMismatch,
          "field has " + std::to_string(v.nodes()) + " nodes, basis " + std::to_string(basis.nodes()));
  if (basis.mean().size() == 0) return matmul(basis.pinv(), Trans::No, v.values, Trans::No);
  Matrix centred = v.values;
  centred.colwise() -= basis.mean();
  return matmul(basis.pinv(), Trans::No, centred, Trans::No);
}

Field decode(const SpectralBasis& basis, const Matrix& coeffs) {
  require(coeffs.rows() == basis.size(), ErrorKind::DimensionMismatch,
          "coefficient rows " + std::to_string(coeffs.rows()) + " != d_m " + std::to_string(basis.size()));
  Field out(matmul(basis.modes(), Trans::No, coeffs, Trans::No), basis.domain_id());
  if (basis.mean().size() != 0) out.values.colwise() += basis.mean();
  return out;
}

namespace {

// Largest-magnitude entry positive; lowest index wins ties. Entries within a
// relative 1e-10 of the maximum count as ties so roundoff cannot pick the sign.
template <typename Col>
void fix_sign(Col&& col) {
  const double mag = col.cwiseAbs().maxCoeff();
  Eigen::Index best = 0;
  while (std::abs(col(best)) < mag * (1.0 - 1e-10)) ++best;
  if (col(best) < 0.0) col = -col;
}

}  // namespace

SpectralBasis lbo_basis(const SparseSymMatrix& s, const SparseSymMatrix& m, Eigen::Index d_m,
                        const Digest& source_id, const LboOptions& opts) {
  const Eigen::Index n = s.dimension();
  require(m.dimension() == n, ErrorKind::DimensionMismatch, "stiffness and mass dimensions differ");
  require(d_m >= 1 && d_m <= n, ErrorKind::DimensionMismatch,
          "d_m = " + std::to_string(d_m) + " outside [1, " + std::to_string(n) + "]");
  bool dense = opts.solver == EigenSolverKind::Dense ||
               (opts.solver == EigenSolverKind::Auto && n <= opts.dense_limit);
  EigenPairs pairs;
  if (dense) {
    pairs = dense_smallest_eigenpairs(s.matrix, m.matrix, d_m);
  } else {
    LanczosOptions lo;
    lo.shift = opts.shift;
    lo.tolerance = opts.tolerance;
    lo.max_iterations = opts.max_iterations;
    pairs = lanczos_smallest_eigenpairs(s.matrix, m.matrix, d_m, lo);
  }
  Matrix modes(n, d_m);
  for (Eigen::Index i = 0; i < d_m; ++i) {
    Eigen::VectorXd col = pairs.vectors.col(i);
    col /= col.norm();
    fix_sign(col);
    modes.col(i) = col;
  }
  return SpectralBasis(BasisKind::LBO, std::move(modes), pairs.values, source_id);
}

SpectralBasis pod_basis(const std::vector<Field>& snapshots, Eigen::Index d_m, const PodOptions& opts) {
  require(!snapshots.empty(), ErrorKind::TooFewSnapshots, "no snapshots");
  const Eigen::Index n = snapshots.front().nodes();
  Eigen::Index cols = 0;
  for (const auto& f : snapshots) {
    require(f.nodes() == n, ErrorKind::DimensionMismatch, "snapshots must share a domain");
    require(f.domain_id == snapshots.front().domain_id, ErrorKind::DomainMismatch, "snapshots must share a domain");
    cols += f.channels();
  }
  require(cols >= d_m, ErrorKind::TooFewSnapshots,
          std::to_string(cols) + " snapshot columns for " + std::to_string(d_m) + " modes");
  require(d_m >= 1 && d_m <= n, ErrorKind::InvalidModeCount, "d_m outside [1, n_x]");

  Eigen::MatrixXd x(n, cols);
  Eigen::Index c = 0;
  Sha256 h;
  h.update("pod");
  for (const auto& f : snapshots) {
    h.update_f64(std::span<const double>(f.values.data(), static_cast<std::size_t>(f.values.size())));
    for (Eigen::Index k = 0; k < f.channels(); ++k) x.col(c++) = f.values.col(k);
  }
  Vector mean;
  if (opts.center) {
    mean = x.rowwise().mean();
    x.colwise() -= mean;
  }
  h.update_u64(opts.center ? 1 : 0);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
  const Vector sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  if (!(top > 0.0) || sv(d_m - 1) <= 1e-12 * top)
    fail(ErrorKind::RankDeficient, "snapshot matrix has rank below " + std::to_string(d_m) + " after centring");
  Matrix modes(n, d_m);
  for (Eigen::Index i = 0; i < d_m; ++i) {
    Eigen::VectorXd col = svd.matrixU().col(i);
    fix_sign(col);
    modes.col(i) = col;
  }
  return SpectralBasis(BasisKind::POD, std::move(modes), sv.head(d_m), h.finish(), std::move(mean));
}

SpectralBasis fourier_basis(Eigen::Index n_t, Eigen::Index d_t) {
  require(n_t >= 1 && d_t >= 1 && d_t <= n_t, ErrorKind::InvalidModeCount, "need 1 <= d_t <= n_t");
  require(d_t % 2 == 1, ErrorKind::InvalidModeCount, "d_t must be odd (constant plus cos/sin pairs)");
  const Eigen::Index pairs = (d_t - 1) / 2;
  // The sine column vanishes at the Nyquist frequency.
  require(2 * pairs < n_t, ErrorKind::InvalidModeCount, "highest frequency reaches Nyquist for n_t");
  Matrix modes(n_t, d_t);
  Vector values(d_t);
  modes.col(0).setConstant(1.0);
  values(0) = 0.0;
  for (Eigen::Index k = 1; k <= pairs; ++k) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k);
    for (Eigen::Index i = 0; i < n_t; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n_t);
      modes(i, 2 * k - 1) = std::cos(w * t);
      modes(i, 2 * k) = std::sin(w * t);
    }
    values(2 * k - 1) = w * w;
    values(2 * k) = w * w;
  }
  for (Eigen::Index c = 0; c < d_t; ++c) modes.col(c) /= modes.col(c).norm();
  Sha256 h;
  h.update("fourier");
  h.update_u64(static_cast<std::uint64_t>(n_t));
  return SpectralBasis(BasisKind::Fourier, std::move(modes), std::move(values), h.finish());
}

ProjectionBound projection_bound_check(const SpectralBasis& basis, const SparseSymMatrix& s,
                                       const SparseSymMatrix& m, const Field& f, Eigen::Index n) {
  require(basis.kind() == BasisKind::LBO, ErrorKind::InvalidSpec, "projection bound needs an LBO basis");
  require(f.nodes() == basis.nodes() && s.dimension() == basis.nodes() && m.dimension() == basis.nodes(),
          ErrorKind::DimensionMismatch, "field, operators and basis must share n_x");
  require(n >= 0 && n < basis.size(), ErrorKind::InvalidModeCount, "need n < d_m");
  const double lambda_next = basis.values()(n);
  const double scale = std::max(1.0, std::abs(basis.values()(basis.size() - 1)));
  if (!(lambda_next > 1e-12 * scale))
    fail(ErrorKind::ZeroEigenvalue, "lambda_{n+1} is numerically zero");

  ProjectionBound out;
  const Vector energy = dirichlet_energy(s, f);
  for (Eigen::Index c = 0; c < f.channels(); ++c) {
    Vector r = f.values.col(c);
    const Vector mf = m.matrix * r;
    // Modes are M-orthogonal; project with the M inner product.
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector phi = basis.modes().col(i);
      const Vector mphi = m.matrix * phi;
      r -= (phi.dot(mf) / phi.dot(mphi)) * phi;
    }
    out.residual_norm_sq += r.dot(m.matrix * r);
    out.bound += energy(c) / lambda_next;
  }
  out.pass = out.residual_norm_sq <= out.bound * (1.0 + kProjectionBoundSlack);
  return out;
}

}  // namespace norm
