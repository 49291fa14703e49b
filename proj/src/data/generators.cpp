#include "norm/data/generators.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <json.hpp>
#include <numbers>

#include "norm/error.hpp"
#include "norm/mesh/fem.hpp"
#include "norm/parallel.hpp"

namespace norm {

Field grf_sample(const SpectralBasis& basis, const Vector& mass, const GrfSpec& spec, Rng& rng) {
  require(basis.kind() == BasisKind::LBO, ErrorKind::InvalidSpec, "GRF sampling needs an LBO basis");
  require(spec.shift > 0.0 && spec.power >= 1.0, ErrorKind::InvalidSpec, "GRF needs shift > 0 and power >= 1");
  require(mass.size() == basis.nodes(), ErrorKind::DimensionMismatch, "mass diagonal does not match the basis");
  Vector mu = Vector::Zero(basis.nodes());
  const auto& phi = basis.modes();
  for (Eigen::Index i = 0; i < basis.size(); ++i) {
    const double lam = std::max(basis.values()(i), 0.0);
    const double sd = std::pow(lam + spec.shift, -0.5 * spec.power);
    const double l2 = std::sqrt((phi.col(i).array().square() * mass.array()).sum());
    mu += (rng.normal() * sd / l2) * phi.col(i);
  }
  return Field(Matrix(mu), basis.domain_id());
}

Field grf_sample(const SpectralBasis& basis, const Vector& mass, const GrfSpec& spec) {
  Rng rng(spec.seed);
  return grf_sample(basis, mass, spec, rng);
}

Field threshold_coefficient(const Field& mu) {
  require(mu.channels() == 1, ErrorKind::DimensionMismatch, "threshold needs a single-channel field");
  Field out = mu;
  for (Eigen::Index i = 0; i < out.values.rows(); ++i) out.values(i, 0) = mu.values(i, 0) >= 0.0 ? 12.0 : 4.0;
  return out;
}

DirichletBC boundary_from_function(const Mesh& mesh, const std::function<double(const Eigen::Vector3d&)>& g) {
  DirichletBC bc;
  bc.nodes = mesh.boundary_vertices();
  for (auto v : bc.nodes) bc.values.push_back(g(mesh.vertex(v)));
  return bc;
}

DirichletBC notch_boundary(const Mesh& mesh) {
  const Eigen::Vector3d lo = mesh.vertices().colwise().minCoeff().transpose();
  const Eigen::Vector3d hi = mesh.vertices().colwise().maxCoeff().transpose();
  const double w = hi.x() - lo.x(), h = hi.y() - lo.y();
  const double tol = 1e-9 * std::max({w, h, 1.0});
  DirichletBC bc;
  for (auto v : mesh.boundary_vertices()) {
    const Eigen::Vector3d p = mesh.vertex(v);
    const double x = p.x() - lo.x(), y = p.y() - lo.y();
    double s = -1.0;
    if (std::abs(y) <= tol) s = x;
    else if (std::abs(x - w) <= tol) s = w + y;
    else if (std::abs(y - h) <= tol) s = w + h + (w - x);
    else if (std::abs(x) <= tol) s = 2.0 * w + h + (h - y);
    bc.nodes.push_back(v);
    bc.values.push_back(s < 0.0 ? 0.0 : 0.1 * std::sin(2.0 * std::numbers::pi * s));
  }
  return bc;
}

struct DarcySolver::Impl {
  const Mesh& mesh;
  DirichletBC bc;
  std::vector<Eigen::Index> free_of;  // node -> reduced index or -1
  std::vector<Eigen::Index> free_nodes;
  Vector bc_values;                   // full-length Dirichlet vector
  Vector mass;
  Eigen::SimplicialLLT<SparseMatrix> solver;
  bool analysed = false;

  Impl(const Mesh& m, DirichletBC b) : mesh(m), bc(std::move(b)) {
    const Eigen::Index n = mesh.num_vertices();
    require(!bc.nodes.empty(), ErrorKind::BoundaryNotFound, "no Dirichlet nodes given");
    require(bc.nodes.size() == bc.values.size(), ErrorKind::BoundaryNotFound, "Dirichlet nodes and values differ in count");
    free_of.assign(static_cast<std::size_t>(n), 0);
    bc_values = Vector::Zero(n);
    for (std::size_t i = 0; i < bc.nodes.size(); ++i) {
      const auto v = bc.nodes[i];
      require(v >= 0 && v < n, ErrorKind::BoundaryNotFound, "Dirichlet node " + std::to_string(v) + " not in mesh");
      free_of[static_cast<std::size_t>(v)] = -1;
      bc_values(v) = bc.values[i];
    }
    for (Eigen::Index v = 0; v < n; ++v) {
      if (free_of[static_cast<std::size_t>(v)] == -1) continue;
      free_of[static_cast<std::size_t>(v)] = static_cast<Eigen::Index>(free_nodes.size());
      free_nodes.push_back(v);
    }
    mass = lumped_mass(mesh).diagonal();
  }
};

DarcySolver::DarcySolver(const Mesh& mesh, DirichletBC bc) : impl_(std::make_unique<Impl>(mesh, std::move(bc))) {}
DarcySolver::~DarcySolver() = default;

Field DarcySolver::solve(const Field& a, double f) const {
  auto& im = *impl_;
  const Mesh& mesh = im.mesh;
  require(a.nodes() == mesh.num_vertices() && a.channels() == 1, ErrorKind::DimensionMismatch,
          "coefficient must be one channel on the mesh nodes");
  require(a.values.allFinite() && a.values.minCoeff() > 0.0, ErrorKind::NonPositiveCoefficient,
          "coefficient must be positive at every node");
  const auto& cells = mesh.cells();
  const int vpc = mesh.vertices_per_cell();
  Vector k(mesh.num_cells());
  for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
    double s = 0.0;
    for (int j = 0; j < vpc; ++j) s += a.values(cells(c, j), 0);
    k(c) = s / vpc;
  }
  const SparseMatrix s = weighted_stiffness(mesh, k).matrix;
  const Eigen::Index nf = static_cast<Eigen::Index>(im.free_nodes.size());
  Vector u = im.bc_values;
  if (nf > 0) {
    std::vector<Eigen::Triplet<double>> trip;
    Vector rhs(nf);
    for (Eigen::Index i = 0; i < nf; ++i) rhs(i) = f * im.mass(im.free_nodes[static_cast<std::size_t>(i)]);
    for (Eigen::Index col = 0; col < s.outerSize(); ++col) {
      const Eigen::Index fc = im.free_of[static_cast<std::size_t>(col)];
      for (SparseMatrix::InnerIterator it(s, col); it; ++it) {
        const Eigen::Index fr = im.free_of[static_cast<std::size_t>(it.row())];
        if (fr < 0) continue;
        if (fc >= 0) trip.emplace_back(fr, fc, it.value());
        else rhs(fr) -= it.value() * im.bc_values(col);
      }
    }
    SparseMatrix kr(nf, nf);
    kr.setFromTriplets(trip.begin(), trip.end());
    if (!im.analysed) {
      im.solver.analyzePattern(kr);
      im.analysed = true;
    }
    im.solver.factorize(kr);
    require(im.solver.info() == Eigen::Success, ErrorKind::SingularSystem,
            "reduced stiffness is not positive definite (a node may be disconnected from the Dirichlet set)");
    const Vector x = im.solver.solve(rhs);
    const double rn = rhs.norm();
    const double res = (kr * x - rhs).norm();
    require(x.allFinite() && res <= 1e-10 * std::max(rn, 1e-300) + 1e-300, ErrorKind::SingularSystem,
            "reduced system residual " + std::to_string(res) + " above tolerance");
    for (Eigen::Index i = 0; i < nf; ++i) u(im.free_nodes[static_cast<std::size_t>(i)]) = x(i);
  }
  return Field(Matrix(u), mesh.domain_id());
}

Field darcy_solve(const Mesh& mesh, const Field& a, double f, const DirichletBC& bc) {
  return DarcySolver(mesh, bc).solve(a, f);
}

Field heat_semigroup_target(const SpectralBasis& full_basis, const Field& a, double t) {
  require(t >= 0.0, ErrorKind::InvalidSpec, "heat time must be >= 0");
  Matrix c = encode(full_basis, a);
  for (Eigen::Index i = 0; i < c.rows(); ++i) c.row(i) *= std::exp(-t * std::max(full_basis.values()(i), 0.0));
  Field u = decode(full_basis, c);
  u.domain_id = a.domain_id.empty() ? full_basis.domain_id() : a.domain_id;
  return u;
}

Dataset make_darcy_dataset(const Mesh& mesh, const SpectralBasis& grf_basis, const DarcyOptions& opts,
                           const DirichletBC& bc) {
  require(opts.n >= 1, ErrorKind::InvalidSpec, "dataset size must be >= 1");
  require(grf_basis.nodes() == mesh.num_vertices(), ErrorKind::DimensionMismatch, "GRF basis is not on the mesh");
  const Vector mass = lumped_mass(mesh).diagonal();
  Dataset ds;
  ds.inputs.resize(opts.n);
  ds.outputs.resize(opts.n);
  parallel_chunks(opts.n, [&](std::size_t, std::size_t begin, std::size_t end) {
    DarcySolver solver(mesh, bc);
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(opts.seed ^ static_cast<std::uint64_t>(i));
      const Field a = threshold_coefficient(grf_sample(grf_basis, mass, opts.grf, rng));
      ds.inputs[i] = a.values;
      ds.outputs[i] = solver.solve(a, opts.source).values;
    }
  });
  ds.input_domain_id = ds.output_domain_id = mesh.domain_id();
  split_five_to_one(ds);
  nlohmann::json p;
  p["generator"] = "darcy";
  p["seed"] = opts.seed;
  p["n"] = opts.n;
  p["mesh_id"] = mesh.domain_id();
  p["grf"] = {{"shift", opts.grf.shift}, {"power", opts.grf.power}, {"modes", grf_basis.size()}};
  p["source"] = opts.source;
  p["boundary"] = "outer 0.1*sin(2*pi*s), inner 0";
  ds.provenance = p.dump();
  return ds;
}

Eigen::Index heat_full_modes(const Mesh& mesh) { return std::min<Eigen::Index>(mesh.num_vertices(), 512); }

Dataset make_heat_dataset(const Mesh& mesh, const SpectralBasis& full_basis, const HeatOptions& opts) {
  require(opts.n >= 1, ErrorKind::InvalidSpec, "dataset size must be >= 1");
  require(full_basis.nodes() == mesh.num_vertices(), ErrorKind::DimensionMismatch, "full basis is not on the mesh");
  const Vector mass = lumped_mass(mesh).diagonal();
  Dataset ds;
  ds.inputs.resize(opts.n);
  ds.outputs.resize(opts.n);
  const std::string id = mesh.domain_id();
  parallel_chunks(opts.n, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(opts.seed ^ static_cast<std::uint64_t>(i));
      Field a = grf_sample(full_basis, mass, opts.grf, rng);
      a.domain_id = id;
      ds.inputs[i] = a.values;
      ds.outputs[i] = heat_semigroup_target(full_basis, a, opts.t).values;
    }
  });
  ds.input_domain_id = ds.output_domain_id = id;
  split_five_to_one(ds);
  nlohmann::json p;
  p["generator"] = "heat";
  p["seed"] = opts.seed;
  p["n"] = opts.n;
  p["t"] = opts.t;
  p["mesh_id"] = id;
  p["grf"] = {{"shift", opts.grf.shift}, {"power", opts.grf.power}, {"modes", full_basis.size()}};
  ds.provenance = p.dump();
  return ds;
}

Dataset make_heat_dataset(const Mesh& mesh, const HeatOptions& opts) {
  const auto s = cotangent_stiffness(mesh);
  const auto m = lumped_mass(mesh);
  const SpectralBasis full = lbo_basis(s, m, heat_full_modes(mesh), mesh.content_hash());
  return make_heat_dataset(mesh, full, opts);
}

}  // namespace norm
