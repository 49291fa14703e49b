#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "norm/data/dataset.hpp"
#include "norm/field.hpp"
#include "norm/mesh/mesh.hpp"
#include "norm/rng.hpp"
#include "norm/spectral/basis.hpp"

namespace norm {

struct GrfSpec {
  double shift = 25.0;
  double power = 2.0;
  std::uint64_t seed = 0;
};

// Karhunen-Loeve sample sum_i xi_i (lambda_i + shift)^(-power/2) phi_i with
// phi_i rescaled to unit L2 (mass) norm, xi_i iid standard normal.
// `mass` is the lumped mass diagonal of the basis mesh.
Field grf_sample(const SpectralBasis& basis, const Vector& mass, const GrfSpec& spec, Rng& rng);
Field grf_sample(const SpectralBasis& basis, const Vector& mass, const GrfSpec& spec);

// 12 where mu >= 0, 4 elsewhere.
Field threshold_coefficient(const Field& mu);

struct DirichletBC {
  std::vector<std::int32_t> nodes;
  std::vector<double> values;
};

// Dirichlet data g(x) on every topological boundary vertex.
DirichletBC boundary_from_function(const Mesh& mesh, const std::function<double(const Eigen::Vector3d&)>& g);

// Boundary vertices on the bounding-box perimeter get 0.1 sin(2 pi s), s the
// arclength from the lower-left corner counterclockwise (unscaled, so a unit
// square has perimeter 4); all other boundary vertices (slits, holes) get 0.
DirichletBC notch_boundary(const Mesh& mesh);

// P1 FEM for -div(a grad u) = f with element coefficient = mean of the
// vertex values of a. Dirichlet rows are eliminated and the reduced SPD
// system is solved by sparse Cholesky.
Field darcy_solve(const Mesh& mesh, const Field& a, double f, const DirichletBC& bc);

// Reuses the symbolic factorisation across coefficient fields.
class DarcySolver {
 public:
  DarcySolver(const Mesh& mesh, DirichletBC bc);
  ~DarcySolver();
  Field solve(const Field& a, double f) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// u = sum_i exp(-t lambda_i) (Phi^dagger a)_i phi_i over the full basis.
Field heat_semigroup_target(const SpectralBasis& full_basis, const Field& a, double t);

struct DarcyOptions {
  std::size_t n = 1200;
  std::uint64_t seed = 0;
  GrfSpec grf{};
  double source = 1.0;
};

// N pairs (threshold(grf), darcy_solve(.., source, bc)), split 5:1.
Dataset make_darcy_dataset(const Mesh& mesh, const SpectralBasis& grf_basis, const DarcyOptions& opts,
                           const DirichletBC& bc);

struct HeatOptions {
  std::size_t n = 500;
  double t = 0.05;
  std::uint64_t seed = 0;
  GrfSpec grf{25.0, 1.0, 0};
};

// Full basis size used for heat targets on a mesh.
Eigen::Index heat_full_modes(const Mesh& mesh);

// Pairs (a, exp(-t Delta) a) with a a GRF drawn in the full basis.
Dataset make_heat_dataset(const Mesh& mesh, const SpectralBasis& full_basis, const HeatOptions& opts);
Dataset make_heat_dataset(const Mesh& mesh, const HeatOptions& opts);

}  // namespace norm
