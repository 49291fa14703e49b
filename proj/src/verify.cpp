#include "norm/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "norm/data/generators.hpp"
#include "norm/mesh/fem.hpp"
#include "norm/mesh/generators.hpp"
#include "norm/op/model.hpp"
#include "norm/rng.hpp"
#include "norm/spectral/basis.hpp"
#include "norm/training/train.hpp"

namespace norm::verify {

using Index = Eigen::Index;

bool SuiteResult::pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

double SuiteResult::worst_margin() const {
  double w = 0.0;
  for (const auto& c : checks) w = std::max(w, c.limit > 0.0 ? c.value / c.limit : (c.pass ? 0.0 : 1e300));
  return w;
}

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Check upper(std::string name, double value, double limit, std::string detail = {}) {
  return Check{std::move(name), value <= limit, value, limit, std::move(detail)};
}

template <class Fn>
SuiteResult timed(const char* name, Fn fn) {
  SuiteResult r;
  r.suite = name;
  const auto t0 = Clock::now();
  fn(r);
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

Field band_limited(const Mesh& mesh, std::uint64_t seed) {
  Rng rng(seed);
  constexpr int kBand = 4;
  double c[kBand + 1][kBand + 1];
  for (int p = 0; p <= kBand; ++p)
    for (int q = 0; q <= kBand; ++q) c[p][q] = rng.normal() / (1.0 + p * p + q * q);
  Matrix f(mesh.num_vertices(), 1);
  const double pi = std::numbers::pi;
  for (Index v = 0; v < mesh.num_vertices(); ++v) {
    const double x = mesh.vertices()(v, 0), y = mesh.vertices()(v, 1);
    double s = 0.0;
    for (int p = 0; p <= kBand; ++p)
      for (int q = 0; q <= kBand; ++q) s += c[p][q] * std::cos(p * pi * x) * std::cos(q * pi * y);
    f(v, 0) = s;
  }
  return Field(f, mesh.domain_id());
}

}  // namespace

SuiteResult spectrum() {
  return timed("spectrum", [](SuiteResult& r) {
    const Mesh mesh = unit_square_grid(64);
    const auto basis = lbo_basis(cotangent_stiffness(mesh), lumped_mass(mesh), 11, mesh.content_hash());
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double expected[10] = {1, 1, 2, 4, 4, 5, 5, 8, 9, 9};
    r.checks.push_back(upper("lambda_1 ~ 0", std::abs(basis.values()(0)), 1e-8 * basis.values()(10)));
    for (int i = 0; i < 10; ++i) {
      const double ref = expected[i] * pi2;
      const double got = basis.values()(i + 1);
      r.checks.push_back(upper("lambda_" + std::to_string(i + 2), std::abs(got - ref) / ref, 0.02,
                               fmt("%.6f vs %.6f", got, ref)));
    }
  });
}

SuiteResult bound() {
  return timed("bound", [](SuiteResult& r) {
    const Mesh mesh = unit_square_grid(32);
    const auto s = cotangent_stiffness(mesh);
    const auto m = lumped_mass(mesh);
    const auto basis = lbo_basis(s, m, 66, mesh.content_hash());
    for (Index n : {8, 32, 64}) {
      double worst = 0.0;
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto pb = projection_bound_check(basis, s, m, band_limited(mesh, 1000 + seed), n);
        worst = std::max(worst, pb.residual_norm_sq / pb.bound);
      }
      r.checks.push_back(upper("band-limited n=" + std::to_string(n), worst, 1.0 + kProjectionBoundSlack,
                               fmt("max residual/bound %.4f over 20 fields", worst)));
      const Field phi(Matrix(basis.modes().col(n)), mesh.domain_id());
      const auto pb = projection_bound_check(basis, s, m, phi, n);
      const double gap = std::abs(pb.residual_norm_sq - pb.bound) / pb.bound;
      r.checks.push_back(upper("tight on phi_" + std::to_string(n + 1), gap, 1e-6));
    }
    Matrix f(mesh.num_vertices(), 1);
    const double pi = std::numbers::pi;
    for (Index v = 0; v < mesh.num_vertices(); ++v)
      f(v, 0) = std::sin(2 * pi * mesh.vertices()(v, 0)) * std::sin(2 * pi * mesh.vertices()(v, 1));
    const auto pb = projection_bound_check(basis, s, m, Field(f, mesh.domain_id()), 10);
    r.checks.push_back(upper("sin(2 pi x) sin(2 pi y) n=10", pb.residual_norm_sq / pb.bound,
                             1.0 + kProjectionBoundSlack));
  });
}

SuiteResult tensor_oracle() {
  return timed("tensor-oracle", [](SuiteResult& r) {
    Rng rng(4);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const Index dm = 1 + static_cast<Index>(rng.below(5));
      const Index dv = 1 + static_cast<Index>(rng.below(5));
      const Index nin = dm + static_cast<Index>(rng.below(static_cast<std::uint64_t>(9 - dm)));
      const Index nout = (t % 2 == 0) ? nin : dm + static_cast<Index>(rng.below(static_cast<std::uint64_t>(9 - dm)));
      auto random_basis = [&](Index n) {
        Matrix phi(n, dm);
        for (Index i = 0; i < phi.size(); ++i) phi.data()[i] = rng.normal();
        Digest id{};
        id[0] = static_cast<std::uint8_t>(t);
        id[1] = static_cast<std::uint8_t>(n);
        return std::make_shared<const SpectralBasis>(BasisKind::LBO, phi, Vector::Zero(dm), id);
      };
      LLayerParams layer;
      layer.kind = (t % 2 == 0) ? LayerKind::Same : LayerKind::Cross;
      layer.basis_in = random_basis(nin);
      layer.basis_out = (t % 2 == 0) ? layer.basis_in : random_basis(nout);
      layer.W = Matrix::Zero(dv, dv);
      layer.b = Vector::Zero(dv);
      layer.R.resize(dm, dv * dv);
      for (Index i = 0; i < layer.R.size(); ++i) layer.R.data()[i] = rng.normal();
      Matrix v(nin, dv);
      for (Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
      const Field got = spectral_block(layer, Field(v, layer.basis_in->domain_id()));

      const Matrix& pinv = layer.basis_in->pinv();
      const Matrix& phi = layer.basis_out->modes();
      Matrix ref = Matrix::Zero(nout, dv);
      double scale = 1.0;
      for (Index y = 0; y < nout; ++y)
        for (Index l = 0; l < dv; ++l) {
          double acc = 0.0;
          for (Index k = 0; k < dm; ++k) {
            double mix = 0.0;
            for (Index j = 0; j < dv; ++j) {
              double c = 0.0;
              for (Index x = 0; x < nin; ++x) c += pinv(k, x) * v(x, j);
              mix += layer.R(k, l * dv + j) * c;
            }
            acc += phi(y, k) * mix;
          }
          ref(y, l) = acc;
          scale = std::max(scale, std::abs(acc));
        }
      worst = std::max(worst, (got.values - ref).cwiseAbs().maxCoeff() / scale);
    }
    r.checks.push_back(upper("50 random shapes", worst, 1e-13, fmt("max scaled deviation %.3e", worst)));
  });
}

SuiteResult gradcheck() {
  return timed("gradcheck", [](SuiteResult& r) {
    const Mesh mesh = unit_square_grid(6);
    auto basis = std::make_shared<const SpectralBasis>(
        lbo_basis(cotangent_stiffness(mesh), lumped_mass(mesh), 8, mesh.content_hash()));
    ArchSpec spec;
    spec.d_v = 4;
    spec.layers = 2;
    spec.activation = Activation::GELU;
    spec.seed = 17;
    spec.basis_in = basis;
    NormModel model = build_model(spec);
    // Nonzero biases so their paths through GELU are exercised.
    Rng rng(18);
    for (auto& t : model.theta) t += 0.1 * rng.normal();
    Matrix a(mesh.num_vertices(), 1);
    for (Index v = 0; v < a.rows(); ++v)
      a(v, 0) = std::sin(3.0 * mesh.vertices()(v, 0)) + 0.5 * mesh.vertices()(v, 1) + 0.2 * rng.normal();
    const Field fa(a, model.input_domain_id);

    const auto res = norm::gradcheck(model, fa, 30, 1e-6, 19);
    r.checks.push_back(upper("30 random parameters", res.max_rel_error, 1e-5,
                             "worst parameter " + std::to_string(res.worst_param)));
    std::vector<std::size_t> idx;
    for (const auto& slot : model.slots) {
      idx.push_back(slot.offset);
      idx.push_back(slot.offset + static_cast<std::size_t>(rng.below(slot.size())));
    }
    const auto per = norm::gradcheck(model, fa, idx, 1e-6, 19);
    r.checks.push_back(upper("two per parameter tensor", per.max_rel_error, 1e-5,
                             std::to_string(model.slots.size()) + " tensors"));
  });
}

SuiteResult fem() {
  return timed("fem", [](SuiteResult& r) {
    // u(1/2, 1/2) = sum over odd m, n of 16 / (pi^4 m n (m^2 + n^2)) (-1)^((m + n) / 2 - 1)
    double oracle = 0.0;
    const double pi4 = std::pow(std::numbers::pi, 4);
    for (int m = 1; m < 4000; m += 2)
      for (int n = 1; n < 4000; n += 2) {
        const double sign = (((m - 1) / 2 + (n - 1) / 2) % 2 == 0) ? 1.0 : -1.0;
        oracle += sign * 16.0 / (pi4 * m * n * (double(m) * m + double(n) * n));
      }
    {
      const Mesh mesh = unit_square_grid(64);
      const auto bc = boundary_from_function(mesh, [](const Eigen::Vector3d&) { return 0.0; });
      const Field a(Matrix::Ones(mesh.num_vertices(), 1), mesh.domain_id());
      const Field u = darcy_solve(mesh, a, 1.0, bc);
      const double umax = u.values.maxCoeff();
      r.checks.push_back(upper("poisson max u", std::abs(umax - oracle) / oracle, 0.02,
                               fmt("%.6f vs series %.6f", umax, oracle)));
    }
    auto linear = [](const Eigen::Vector3d& p) { return 0.3 + 1.7 * p.x() - 0.6 * p.y(); };
    for (int which = 0; which < 2; ++which) {
      const Mesh mesh = which == 0 ? unit_square_grid(16) : notched_square(24);
      const auto bc = boundary_from_function(mesh, linear);
      const Field a(Matrix::Ones(mesh.num_vertices(), 1), mesh.domain_id());
      const Field u = darcy_solve(mesh, a, 0.0, bc);
      double err = 0.0;
      for (Index v = 0; v < mesh.num_vertices(); ++v) err = std::max(err, std::abs(u.values(v, 0) - linear(mesh.vertex(v))));
      r.checks.push_back(upper(which == 0 ? "patch test (square)" : "patch test (notched)", err, 1e-8));
    }
  });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"spectrum", "bound", "gradcheck", "tensor-oracle", "fem"};
  return names;
}

bool run_named(const std::string& name, SuiteResult& out) {
  if (name == "spectrum") out = spectrum();
  else if (name == "bound") out = bound();
  else if (name == "gradcheck") out = gradcheck();
  else if (name == "tensor-oracle") out = tensor_oracle();
  else if (name == "fem") out = fem();
  else return false;
  return true;
}

}  // namespace norm::verify
