#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "norm/field.hpp"
#include "norm/hash.hpp"
#include "norm/linalg.hpp"
#include "norm/mesh/fem.hpp"

namespace norm {

enum class BasisKind : std::uint32_t { LBO = 0, POD = 1, Fourier = 2 };

const char* to_string(BasisKind kind);

// A truncated basis sampled at nodes. modes is n_x x d_m (one basis function
// per column), pinv its (Phi^T Phi)^{-1} Phi^T. For LBO/Fourier the values
// are eigenvalues ascending; for POD they are singular values descending.
class SpectralBasis {
 public:
  SpectralBasis(BasisKind kind, Matrix modes, Vector values, Digest source_id, Vector mean = {});
  // Trusted constructor for deserialisation: pinv is taken as stored.
  SpectralBasis(BasisKind kind, Matrix modes, Vector values, Matrix pinv, Digest source_id, Vector mean);

  BasisKind kind() const { return kind_; }
  Eigen::Index nodes() const { return modes_.rows(); }
  Eigen::Index size() const { return modes_.cols(); }

  const Matrix& modes() const { return modes_; }
  const Matrix& pinv() const { return pinv_; }
  const Vector& values() const { return values_; }
  const Digest& source_id() const { return source_id_; }
  std::string domain_id() const { return to_hex(source_id_); }

  // POD only: snapshot mean re-added by decode (empty when not centred).
  const Vector& mean() const { return mean_; }

  // Leading-k sub-basis (pinv recomputed for the truncated columns).
  SpectralBasis truncated(Eigen::Index k) const;

 private:
  BasisKind kind_;
  Matrix modes_;
  Vector values_;
  Matrix pinv_;
  Digest source_id_;
  Vector mean_;
};

using BasisPtr = std::shared_ptr<const SpectralBasis>;

enum class EigenSolverKind { Auto, Dense, Lanczos };

struct LboOptions {
  EigenSolverKind solver = EigenSolverKind::Auto;
  Eigen::Index dense_limit = 3000;  // Auto uses the dense solver up to this n_x
  double shift = -1e-3;
  double tolerance = 1e-9;
  int max_iterations = 500;
};

// d_m smallest generalized eigenpairs of S phi = lambda M phi; columns scaled
// to unit Euclidean norm, sign fixed so the largest-magnitude entry is
// positive (lowest index on ties).
SpectralBasis lbo_basis(const SparseSymMatrix& s, const SparseSymMatrix& m, Eigen::Index d_m,
                        const Digest& source_id, const LboOptions& opts = {});

// (Phi^T Phi)^{-1} Phi^T; RankDeficient when the Gram matrix is singular or
// its condition number exceeds 1e12.
Matrix pseudo_inverse(const Matrix& phi);

// Phi^dagger (V - mean) : d_m x d_c.
Matrix encode(const SpectralBasis& basis, const Field& v);
// Phi B (+ mean) on the basis domain.
Field decode(const SpectralBasis& basis, const Matrix& coeffs);

struct PodOptions {
  bool center = true;
};

// Every channel of every snapshot is one column of the snapshot matrix.
SpectralBasis pod_basis(const std::vector<Field>& snapshots, Eigen::Index d_m, const PodOptions& opts = {});

// {1, cos(2 pi k t), sin(2 pi k t)} on t_i = i / n_t, unit-normalized columns,
// eigenvalues (2 pi k)^2. d_t must be odd.
SpectralBasis fourier_basis(Eigen::Index n_t, Eigen::Index d_t);

struct ProjectionBound {
  double residual_norm_sq = 0.0;
  double bound = 0.0;
  bool pass = false;
};

inline constexpr double kProjectionBoundSlack = 0.05;

// Mass-weighted residual of projecting f on the first n modes against
// f^T S f / lambda_{n+1}. Channels are summed.
ProjectionBound projection_bound_check(const SpectralBasis& basis, const SparseSymMatrix& s,
                                       const SparseSymMatrix& m, const Field& f, Eigen::Index n);

// .nsb cache file (magic NORMSB1\0).
void save_basis(const SpectralBasis& basis, const std::filesystem::path& path);
SpectralBasis load_basis(const std::filesystem::path& path);

}  // namespace norm
