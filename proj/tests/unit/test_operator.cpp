#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "norm/error.hpp"
#include "norm/mesh/fem.hpp"
#include "norm/mesh/generators.hpp"
#include "norm/op/model.hpp"
#include "norm/rng.hpp"
#include "norm/training/train.hpp"

using namespace norm;
using Eigen::Index;

namespace {

BasisPtr lbo_on(const Mesh& mesh, Index k) {
  return std::make_shared<const SpectralBasis>(
      lbo_basis(cotangent_stiffness(mesh), lumped_mass(mesh), k, mesh.content_hash()));
}

Matrix random_matrix(Index r, Index c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

ArchSpec small_spec(BasisPtr basis, Index dv, int layers, Activation act, Index q_hidden) {
  ArchSpec s;
  s.d_v = dv;
  s.layers = layers;
  s.activation = act;
  s.q_hidden = q_hidden;
  s.basis_in = std::move(basis);
  s.seed = 5;
  return s;
}

LLayerParams plain_layer(BasisPtr basis, Index dv, Activation act) {
  LLayerParams l;
  l.activation = act;
  l.W = Matrix::Zero(dv, dv);
  l.b = Vector::Zero(dv);
  l.R = Matrix::Zero(basis->size(), dv * dv);
  l.basis_in = l.basis_out = basis;
  return l;
}

Field input_for(const NormModel& m, std::uint64_t seed) {
  return Field(random_matrix(m.input_nodes(), m.spec.d_a, seed), m.input_domain_id);
}

}  // namespace

TEST(ParamCount, SmallExample) {
  const Mesh mesh = unit_square_grid(3);
  auto spec = small_spec(lbo_on(mesh, 3), 2, 1, Activation::GELU, 0);
  // P: 1*2+2, layer: 4+2+3*4, Q: 2*1+1
  EXPECT_EQ(build_model(spec).param_count(), 25u);
}

TEST(ParamCount, DefaultDarcyShape) {
  const Mesh mesh = unit_square_grid(12);
  ArchSpec spec;
  spec.basis_in = lbo_on(mesh, 128);
  const auto m = build_model(spec);
  const std::size_t p = 32 + 32, layer = 32 * 32 + 32 + 128 * 32 * 32, q = 32 * 128 + 128 + 128 + 1;
  EXPECT_EQ(m.param_count(), p + 4 * layer + q);
}

TEST(ParamCount, IndependentOfNodeCount) {
  const Mesh coarse = unit_square_grid(6);
  const Mesh fine = refine(coarse);
  const auto a = build_model(small_spec(lbo_on(coarse, 10), 4, 2, Activation::GELU, 8));
  const auto b = build_model(small_spec(lbo_on(fine, 10), 4, 2, Activation::GELU, 8));
  EXPECT_EQ(a.param_count(), b.param_count());
}

TEST(ParamCount, OnlyRGrowsWithModes) {
  const Mesh mesh = unit_square_grid(8);
  const auto a = build_model(small_spec(lbo_on(mesh, 8), 3, 2, Activation::GELU, 0));
  const auto b = build_model(small_spec(lbo_on(mesh, 16), 3, 2, Activation::GELU, 0));
  EXPECT_EQ(b.param_count() - a.param_count(), 2u * 8u * 9u);
}

TEST(SpectralBlock, IdentityRIsProjection) {
  const Mesh mesh = unit_square_grid(5);
  auto basis = lbo_on(mesh, 6);
  auto l = plain_layer(basis, 2, Activation::Identity);
  for (Index k = 0; k < 6; ++k)
    for (Index j = 0; j < 2; ++j) l.R(k, j * 2 + j) = 1.0;
  // In-span input comes back unchanged.
  const Matrix coeffs = random_matrix(6, 2, 3);
  const Field v(basis->modes() * coeffs, basis->domain_id());
  const Field out = spectral_block(l, v);
  EXPECT_LE((out.values - v.values).cwiseAbs().maxCoeff(), 1e-12);
  // Generic input: Phi Phi^dagger V.
  const Field w(random_matrix(basis->nodes(), 2, 4), basis->domain_id());
  const Matrix proj = basis->modes() * (basis->pinv() * w.values);
  EXPECT_LE((spectral_block(l, w).values - proj).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SpectralBlock, ZeroR) {
  const Mesh mesh = unit_square_grid(4);
  auto basis = lbo_on(mesh, 5);
  const auto l = plain_layer(basis, 3, Activation::Identity);
  const Field v(random_matrix(basis->nodes(), 3, 1), basis->domain_id());
  EXPECT_EQ(spectral_block(l, v).values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SpectralBlock, MatchesExplicitSum) {
  const Mesh mesh = unit_square_grid(4);
  auto basis = lbo_on(mesh, 4);
  const Index dv = 3, dm = 4;
  auto l = plain_layer(basis, dv, Activation::Identity);
  l.R = random_matrix(dm, dv * dv, 8);
  const Field v(random_matrix(basis->nodes(), dv, 9), basis->domain_id());
  const Matrix& phi = basis->modes();
  const Matrix& pinv = basis->pinv();
  Matrix c = Matrix::Zero(dm, dv);
  for (Index k = 0; k < dm; ++k)
    for (Index j = 0; j < dv; ++j)
      for (Index x = 0; x < phi.rows(); ++x) c(k, j) += pinv(k, x) * v.values(x, j);
  Matrix mix = Matrix::Zero(dm, dv);
  for (Index k = 0; k < dm; ++k)
    for (Index ll = 0; ll < dv; ++ll)
      for (Index j = 0; j < dv; ++j) mix(k, ll) += l.R(k, ll * dv + j) * c(k, j);
  Matrix expect = Matrix::Zero(phi.rows(), dv);
  for (Index x = 0; x < phi.rows(); ++x)
    for (Index ll = 0; ll < dv; ++ll)
      for (Index k = 0; k < dm; ++k) expect(x, ll) += phi(x, k) * mix(k, ll);
  EXPECT_LE((spectral_block(l, v).values - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SpectralBlock, DiagonalRMultipliesCoefficients) {
  const Mesh mesh = unit_square_grid(6);
  auto basis = lbo_on(mesh, 10);
  const Index dv = 2;
  auto l = plain_layer(basis, dv, Activation::Identity);
  Vector c(10);
  for (Index k = 0; k < 10; ++k) c(k) = std::exp(-0.3 * static_cast<double>(k));
  for (Index k = 0; k < 10; ++k)
    for (Index j = 0; j < dv; ++j) l.R(k, j * dv + j) = c(k);
  const Field v(random_matrix(basis->nodes(), dv, 2), basis->domain_id());
  const Matrix expect = decode(*basis, c.asDiagonal() * encode(*basis, v)).values;
  EXPECT_LE((l_layer_forward(l, v).values - expect).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(LLayer, ZeroParametersReluGivesZero) {
  const Mesh mesh = unit_square_grid(3);
  const auto l = plain_layer(lbo_on(mesh, 4), 3, Activation::ReLU);
  const Field v(random_matrix(16, 3, 7), l.basis_in->domain_id());
  EXPECT_EQ(l_layer_forward(l, v).values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(LLayer, AffineWithZeroR) {
  const Mesh mesh = unit_square_grid(3);
  auto l = plain_layer(lbo_on(mesh, 4), 3, Activation::Identity);
  l.W = random_matrix(3, 3, 1);
  l.b = random_matrix(3, 1, 2).col(0);
  const Field v(random_matrix(16, 3, 3), l.basis_in->domain_id());
  const Matrix expect = (v.values * l.W).rowwise() + l.b.transpose();
  EXPECT_LE((l_layer_forward(l, v).values - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LLayer, PointwisePartIsPermutationEquivariant) {
  const Mesh mesh = unit_square_grid(4);
  auto l = plain_layer(lbo_on(mesh, 4), 2, Activation::GELU);
  l.W = random_matrix(2, 2, 5);
  l.b = random_matrix(2, 1, 6).col(0);
  const Matrix v = random_matrix(25, 2, 7);
  std::vector<Index> perm(25);
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(3);
  for (Index i = 24; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  Matrix pv(25, 2);
  for (Index i = 0; i < 25; ++i) pv.row(i) = v.row(perm[i]);
  const Matrix out = l_layer_forward(l, Field(v, l.basis_in->domain_id())).values;
  const Matrix pout = l_layer_forward(l, Field(pv, l.basis_in->domain_id())).values;
  for (Index i = 0; i < 25; ++i) EXPECT_EQ(pout.row(i), out.row(perm[i]));
}

TEST(Forward, ZeroParametersGiveQBias) {
  const Mesh mesh = unit_square_grid(4);
  auto m = build_model(small_spec(lbo_on(mesh, 6), 4, 3, Activation::GELU, 16));
  std::fill(m.theta.begin(), m.theta.end(), 0.0);
  m.param(m.slot_index("Q.1.b"))(0, 0) = 0.7;
  const Field out = forward(m, input_for(m, 1));
  ASSERT_EQ(out.nodes(), 25);
  for (Index i = 0; i < out.nodes(); ++i) EXPECT_DOUBLE_EQ(out.values(i, 0), 0.7);
}

TEST(Forward, RejectsWrongNodeCount) {
  const Mesh mesh = unit_square_grid(4);
  const auto m = build_model(small_spec(lbo_on(mesh, 6), 4, 2, Activation::GELU, 0));
  EXPECT_THROW(forward(m, Field(Matrix::Ones(24, 1), m.input_domain_id)), Error);
}

TEST(Forward, CrossManifoldShape) {
  const Mesh x = unit_square_grid(4), y = unit_square_grid(6);
  ArchSpec s;
  s.wiring = Wiring::CrossManifold;
  s.d_v = 4;
  s.layers = 3;
  s.q_hidden = 0;
  s.basis_in = lbo_on(x, 6);
  s.basis_out = lbo_on(y, 6);
  const auto m = build_model(s);
  EXPECT_EQ(m.input_nodes(), 25);
  EXPECT_EQ(m.output_nodes(), 49);
  const Field out = forward(m, input_for(m, 2));
  EXPECT_EQ(out.nodes(), 49);
  EXPECT_EQ(out.domain_id, m.output_domain_id);
  const auto res = gradcheck(m, input_for(m, 3), 40, 1e-6, 1);
  EXPECT_LE(res.max_rel_error, 1e-5);
}

TEST(Forward, TemporalShape) {
  const Mesh y = unit_square_grid(3);
  ArchSpec s;
  s.wiring = Wiring::TemporalToManifold;
  s.d_v = 3;
  s.layers = 3;
  s.q_hidden = 0;
  s.n_t = 8;
  s.d_t = 3;
  s.basis_out = lbo_on(y, 5);
  const auto m = build_model(s);
  EXPECT_EQ(m.input_nodes(), 8);
  EXPECT_EQ(m.output_nodes(), 8 * 16);
  EXPECT_EQ(forward(m, input_for(m, 1)).nodes(), 128);
  EXPECT_LE(gradcheck(m, input_for(m, 4), 40, 1e-6, 2).max_rel_error, 1e-5);
}

TEST(Spec, Invalid) {
  const Mesh a = unit_square_grid(4), b = unit_square_grid(5);
  ArchSpec s;
  s.basis_in = lbo_on(a, 6);
  s.basis_out = lbo_on(b, 6);
  try {
    build_model(s);
    FAIL() << "same-manifold model accepted two bases";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidSpec);
  }
  ArchSpec t;
  t.wiring = Wiring::TemporalToManifold;
  t.n_t = 8;
  t.d_t = 4;
  t.basis_out = lbo_on(b, 6);
  try {
    build_model(t);
    FAIL() << "even d_t accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidSpec);
  }
  ArchSpec c;
  c.wiring = Wiring::CrossManifold;
  c.basis_in = lbo_on(a, 6);
  c.basis_out = lbo_on(b, 5);
  EXPECT_THROW(build_model(c), Error);
}

TEST(Backward, ZeroUpstreamGivesZeroGradient) {
  const Mesh mesh = unit_square_grid(4);
  const auto m = build_model(small_spec(lbo_on(mesh, 6), 4, 2, Activation::GELU, 8));
  const Field a = input_for(m, 1);
  const auto g = backward(m, a, Field(Matrix::Zero(25, 1), m.output_domain_id));
  for (double x : g.params) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(g.input.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Backward, LinearLayerWeightGradient) {
  const Mesh mesh = unit_square_grid(4);
  auto m = build_model(small_spec(lbo_on(mesh, 6), 3, 1, Activation::Identity, 0));
  Rng rng(9);
  for (auto& t : m.theta) t += 0.1 * rng.normal();
  const Field a = input_for(m, 2);
  const Matrix g = random_matrix(25, 1, 3);
  const auto pw = m.param(m.slot_index("P.0.W")), qw = m.param(m.slot_index("Q.0.W"));
  const Matrix v0 = (a.values * pw).rowwise() + m.param(m.slot_index("P.0.b")).row(0);
  const Matrix expect = v0.transpose() * (g * qw.transpose());
  const auto grads = backward(m, a, Field(g, m.output_domain_id));
  const auto& slot = m.slots[m.slot_index("L0.W")];
  const Eigen::Map<const Matrix> got(grads.params.data() + slot.offset, slot.rows, slot.cols);
  EXPECT_LE((got - expect).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
}

TEST(Backward, GradcheckGelu) {
  const Mesh mesh = unit_square_grid(6);
  auto m = build_model(small_spec(lbo_on(mesh, 8), 4, 3, Activation::GELU, 6));
  Rng rng(4);
  for (auto& t : m.theta) t += 0.1 * rng.normal();
  const auto res = gradcheck(m, input_for(m, 5), 60, 1e-6, 7);
  EXPECT_LE(res.max_rel_error, 1e-5) << "worst parameter " << res.worst_param;
}

TEST(Backward, GradcheckLinearModelIsExact) {
  // Affine in every single parameter, so a large step has no truncation error.
  const Mesh mesh = unit_square_grid(5);
  auto m = build_model(small_spec(lbo_on(mesh, 6), 3, 2, Activation::Identity, 0));
  const auto res = gradcheck(m, input_for(m, 6), m.param_count(), 0.5, 8);
  EXPECT_EQ(res.checked.size(), m.param_count());
  EXPECT_LE(res.max_rel_error, 1e-9);
}

TEST(Batch, MatchesPerSample) {
  const Mesh mesh = unit_square_grid(5);
  auto m = build_model(small_spec(lbo_on(mesh, 7), 4, 2, Activation::GELU, 5));
  std::vector<Matrix> in;
  for (int i = 0; i < 3; ++i) in.push_back(random_matrix(36, 1, 20 + i));
  std::vector<const Matrix*> ptrs;
  for (const auto& x : in) ptrs.push_back(&x);
  BatchWorkspace ws;
  const Matrix out = forward_batch(m, pack_samples(ptrs), 3, &ws);
  const Matrix g = random_matrix(36, 3, 30);
  std::vector<double> grad(m.param_count(), 0.0);
  Matrix gin;
  backward_batch(m, ws, g, grad, &gin);

  std::vector<double> ref(m.param_count(), 0.0);
  for (int i = 0; i < 3; ++i) {
    const Field a(in[i], m.input_domain_id);
    const Matrix one = forward(m, a).values;
    EXPECT_LE((unpack_sample(out, 3, i) - one).cwiseAbs().maxCoeff(), 1e-12);
    const auto gi = backward(m, a, Field(Matrix(g.col(i)), m.output_domain_id));
    for (std::size_t p = 0; p < ref.size(); ++p) ref[p] += gi.params[p];
    EXPECT_LE((unpack_sample(gin, 3, i) - gi.input).cwiseAbs().maxCoeff(), 1e-11);
  }
  double worst = 0.0, scale = 0.0;
  for (std::size_t p = 0; p < ref.size(); ++p) {
    worst = std::max(worst, std::abs(grad[p] - ref[p]));
    scale = std::max(scale, std::abs(ref[p]));
  }
  EXPECT_LE(worst, 1e-12 * scale);
}

TEST(Checkpoint, RoundTrip) {
  const Mesh mesh = unit_square_grid(4);
  const auto m = build_model(small_spec(lbo_on(mesh, 6), 4, 2, Activation::GELU, 8));
  const auto dir = std::filesystem::temp_directory_path() / "norm_test_ckpt";
  std::filesystem::remove_all(dir);
  save_checkpoint(m, dir, R"({"note":1})");
  const auto back = load_checkpoint(dir);
  EXPECT_EQ(back.theta, m.theta);
  EXPECT_EQ(back.input_domain_id, m.input_domain_id);
  const Field a = input_for(m, 3);
  EXPECT_EQ(forward(back, a).values, forward(m, a).values);
  EXPECT_NE(checkpoint_extra(dir).find("note"), std::string::npos);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_checkpoint(dir), Error);
}

TEST(Rebind, KeepsParametersAndRunsOnNewMesh) {
  const Mesh coarse = unit_square_grid(6);
  const Mesh fine = refine(coarse);
  const auto m = build_model(small_spec(lbo_on(coarse, 8), 4, 2, Activation::GELU, 8));
  auto fb = lbo_on(fine, 8);
  const auto r = rebind(m, fb, fb);
  EXPECT_EQ(r.theta, m.theta);
  EXPECT_EQ(r.input_nodes(), fine.num_vertices());
  EXPECT_EQ(forward(r, input_for(r, 1)).nodes(), fine.num_vertices());
  auto wrong = lbo_on(fine, 9);
  EXPECT_THROW(rebind(m, wrong, wrong), Error);
}
