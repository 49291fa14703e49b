#include <gtest/gtest.h>

#include <cmath>
#include <limits>

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

// Inputs are smooth random fields; outputs are inputs scaled per mode.
Dataset smooth_dataset(const SpectralBasis& basis, std::size_t n, std::uint64_t seed, bool identity) {
  Dataset ds;
  Rng rng(seed);
  for (std::size_t s = 0; s < n; ++s) {
    Matrix c(basis.size(), 1);
    for (Index k = 0; k < c.rows(); ++k) c(k, 0) = rng.normal() / (1.0 + static_cast<double>(k));
    ds.inputs.push_back(basis.modes() * c);
    if (!identity)
      for (Index k = 0; k < c.rows(); ++k) c(k, 0) *= std::exp(-0.2 * static_cast<double>(k));
    ds.outputs.push_back(basis.modes() * c);
  }
  ds.input_domain_id = ds.output_domain_id = basis.domain_id();
  split_five_to_one(ds);
  return ds;
}

ArchSpec small_arch(BasisPtr b) {
  ArchSpec s;
  s.d_v = 8;
  s.layers = 2;
  s.q_hidden = 16;
  s.basis_in = std::move(b);
  s.seed = 3;
  return s;
}

}  // namespace

TEST(Loss, RelL2) {
  Matrix t(2, 1), p(2, 1);
  t << 3.0, 4.0;
  p << 3.0, 4.5;
  EXPECT_DOUBLE_EQ(rel_l2(p, t), 0.1);
  EXPECT_DOUBLE_EQ(rel_l2(t, t), 0.0);
  // Scale invariant.
  EXPECT_NEAR(rel_l2(Matrix(7.0 * p), Matrix(7.0 * t)), 0.1, 1e-15);
  try {
    rel_l2(p, Matrix::Zero(2, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroTarget);
  }
  EXPECT_THROW(rel_l2(p, Matrix::Zero(3, 1)), Error);
}

TEST(Loss, Mme) {
  Matrix t0 = Matrix::Zero(3, 1), t1 = Matrix::Ones(3, 1);
  Matrix p0 = t0, p1 = t1;
  p0(1, 0) = -0.2;
  p1(2, 0) = 1.6;
  EXPECT_DOUBLE_EQ(mme_batch({p0, p1}, {t0, t1}), 0.5 * (0.2 + 0.6));
  try {
    mme_batch({}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyBatch);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0, 3.0}, g(3, 0.0);
  AdamState st;
  adam_step(p, g, st, 1e-3);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(Adam, FirstStepIsLearningRate) {
  std::vector<double> p{0.0, 0.0}, g{5.0, -0.01};
  AdamState st;
  adam_step(p, g, st, 1e-3);
  EXPECT_NEAR(p[0], -1e-3, 1e-9);
  EXPECT_NEAR(p[1], 1e-3, 1e-6);
}

TEST(Adam, MinimisesQuadratic) {
  const std::size_t n = 10;
  std::vector<double> p(n), target(n), g(n);
  Rng rng(1);
  for (std::size_t i = 0; i < n; ++i) target[i] = rng.normal();
  AdamState st;
  for (int it = 0; it < 5000; ++it) {
    for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * (p[i] - target[i]) * (1.0 + static_cast<double>(i));
    adam_step(p, g, st, 1e-2 * std::pow(0.999, it));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) loss += (p[i] - target[i]) * (p[i] - target[i]) * (1.0 + static_cast<double>(i));
  EXPECT_LT(loss, 1e-6);
}

TEST(Normalizer, ApplyInvertAndConstantChannel) {
  std::vector<Matrix> xs;
  Rng rng(2);
  for (int s = 0; s < 4; ++s) {
    Matrix m(5, 2);
    for (Index i = 0; i < 5; ++i) {
      m(i, 0) = 3.0 + 2.0 * rng.normal();
      m(i, 1) = 7.0;
    }
    xs.push_back(m);
  }
  const auto n = fit_normalizer(xs, {0, 1, 2, 3}, Normalization::GlobalPerChannel);
  Matrix y = xs[1];
  n.apply(y);
  EXPECT_EQ(y.col(1), xs[1].col(1));  // constant channel passes through
  n.invert(y);
  EXPECT_LE((y - xs[1]).cwiseAbs().maxCoeff(), 1e-14);

  Matrix all(20, 1);
  for (int s = 0; s < 4; ++s) {
    Matrix t = xs[s];
    n.apply(t);
    all.middleRows(5 * s, 5) = t.col(0);
  }
  EXPECT_NEAR(all.mean(), 0.0, 1e-14);
  EXPECT_NEAR(std::sqrt(all.array().square().mean()), 1.0, 1e-14);

  const auto back = Normalizer::from_json(n.to_json());
  EXPECT_EQ(back.mean, n.mean);
  EXPECT_EQ(back.std, n.std);
  EXPECT_TRUE(fit_normalizer(xs, {0}, Normalization::None).empty());
}

TEST(Train, LearnsIdentity) {
  const Mesh mesh = unit_square_grid(8);
  auto basis = lbo_on(mesh, 16);
  const Dataset ds = smooth_dataset(*basis, 60, 7, true);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 10;
  cfg.learning_rate = 3e-3;
  cfg.halve_every = 50;
  const auto res = train(build_model(small_arch(basis)), ds, cfg);
  ASSERT_EQ(res.history.size(), 200u);
  const auto m = evaluate(res.model, res.input_norm, res.output_norm, ds, ds.test);
  EXPECT_LT(m.rel_l2, 1e-2);
  EXPECT_LT(res.history.back().train_loss, res.history.front().train_loss);
}

TEST(Train, NonFiniteLossNamesSample) {
  const Mesh mesh = unit_square_grid(4);
  auto basis = lbo_on(mesh, 6);
  Dataset ds = smooth_dataset(*basis, 12, 3, false);
  ds.outputs[3](2, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  cfg.normalization = Normalization::None;
  try {
    train(build_model(small_arch(basis)), ds, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("sample 3"), std::string::npos) << e.what();
  }
}

TEST(Evaluate, PerfectModelScoresZero) {
  // A pure-bias model reproduces a constant target exactly.
  const Mesh mesh = unit_square_grid(4);
  auto basis = lbo_on(mesh, 6);
  auto spec = small_arch(basis);
  spec.q_hidden = 0;
  auto model = build_model(spec);
  std::fill(model.theta.begin(), model.theta.end(), 0.0);
  model.param(model.slot_index("Q.0.b"))(0, 0) = 2.5;
  Dataset ds;
  for (int s = 0; s < 6; ++s) {
    ds.inputs.push_back(Matrix::Constant(25, 1, s));
    ds.outputs.push_back(Matrix::Constant(25, 1, 2.5));
  }
  ds.input_domain_id = ds.output_domain_id = basis->domain_id();
  split_five_to_one(ds);
  const auto m = evaluate(model, {}, {}, ds, {0, 1, 2, 3, 4, 5});
  EXPECT_EQ(m.rel_l2, 0.0);
  EXPECT_EQ(m.mme, 0.0);
  EXPECT_EQ(m.per_sample_rel_l2.size(), 6u);
}

TEST(Train, Deterministic) {
  const Mesh mesh = unit_square_grid(5);
  auto basis = lbo_on(mesh, 8);
  const Dataset ds = smooth_dataset(*basis, 24, 4, false);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 5;
  const auto a = train(build_model(small_arch(basis)), ds, cfg);
  const auto b = train(build_model(small_arch(basis)), ds, cfg);
  EXPECT_EQ(a.model.theta, b.model.theta);
  cfg.seed = 1;
  const auto c = train(build_model(small_arch(basis)), ds, cfg);
  EXPECT_NE(a.model.theta, c.model.theta);
}

TEST(Train, RejectsBadConfig) {
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(validate(cfg), Error);
  cfg = TrainConfig{};
  cfg.learning_rate = -1.0;
  EXPECT_THROW(validate(cfg), Error);
}
