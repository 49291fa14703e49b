#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <Eigen/LU>
#include <Eigen/QR>

#include "norm/error.hpp"
#include "norm/mesh/fem.hpp"
#include "norm/mesh/generators.hpp"
#include "norm/mesh/io.hpp"
#include "norm/rng.hpp"
#include "norm/spectral/basis.hpp"
#include "norm/spectral/eigensolver.hpp"

using namespace norm;
using Index = Eigen::Index;

namespace {

template <class Fn>
ErrorKind kind_of(Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

Matrix randn(Index r, Index c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

struct LboCase {
  Mesh mesh;
  SparseSymMatrix s, m;
  SpectralBasis basis;
  explicit LboCase(Mesh msh, Index d_m, const LboOptions& o = {})
      : mesh(std::move(msh)),
        s(cotangent_stiffness(mesh)),
        m(lumped_mass(mesh)),
        basis(lbo_basis(s, m, d_m, mesh.content_hash(), o)) {}
};

// ||S phi_i - lambda_i M phi_i|| <= tol ||S phi_i|| for every nonconstant mode.
void expect_eigen_residual(const LboCase& st, double tol) {
  const auto& phi = st.basis.modes();
  for (Index i = 1; i < st.basis.size(); ++i) {
    const Vector sphi = st.s.matrix * phi.col(i);
    const Vector r = sphi - st.basis.values()(i) * (st.m.matrix * phi.col(i));
    EXPECT_LE(r.norm(), tol * sphi.norm()) << "mode " << i;
  }
}

}  // namespace

TEST(PseudoInverse, ClosedForms) {
  Matrix phi(2, 1);
  phi << 2, 0;
  const Matrix p = pseudo_inverse(phi);
  EXPECT_NEAR(p(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.0, 1e-15);

  Eigen::HouseholderQR<Matrix> qr(randn(9, 4, 1));
  const Matrix q = qr.householderQ() * Matrix::Identity(9, 4);
  EXPECT_LE((pseudo_inverse(q) - q.transpose()).cwiseAbs().maxCoeff(), 1e-12);

  Matrix twin(4, 2);
  twin.col(0) << 1, 2, 3, 4;
  twin.col(1) = twin.col(0);
  EXPECT_EQ(kind_of([&] { pseudo_inverse(twin); }), ErrorKind::RankDeficient);
}

TEST(Lbo, InvariantsOnNotchedSquare) {
  const LboCase st(notched_square(16), 24);
  const auto& b = st.basis;
  EXPECT_EQ(b.kind(), BasisKind::LBO);
  EXPECT_LE((b.pinv() * b.modes() - Matrix::Identity(24, 24)).norm(), 1e-8 * std::sqrt(24.0));
  for (Index i = 0; i + 1 < b.size(); ++i) EXPECT_LE(b.values()(i), b.values()(i + 1) + 1e-12);
  EXPECT_LE(std::abs(b.values()(0)), 1e-8 * b.values()(23));
  for (Index i = 0; i < b.size(); ++i) EXPECT_NEAR(b.modes().col(i).norm(), 1.0, 1e-12);
  // First mode constant, sign fixed positive.
  const auto c0 = b.modes().col(0);
  EXPECT_LE(c0.maxCoeff() - c0.minCoeff(), 1e-8);
  EXPECT_GT(c0(0), 0.0);
  const Matrix sphi = st.s.matrix * b.modes();
  const Matrix mphil = st.m.matrix * b.modes() * b.values().asDiagonal();
  EXPECT_LE((sphi - mphil).norm(), 1e-7 * sphi.norm());
  expect_eigen_residual(st, 1e-7);
}

TEST(Lbo, SignConvention) {
  const LboCase st(unit_square_grid(8), 6);
  for (Index i = 0; i < 6; ++i) {
    const auto c = st.basis.modes().col(i);
    Index arg = 0;
    for (Index r = 1; r < c.size(); ++r)
      if (std::abs(c(r)) > std::abs(c(arg)) * (1 + 1e-8)) arg = r;
    EXPECT_GT(c(arg), 0.0) << "mode " << i;
  }
}

TEST(Lbo, NeumannSpectrumOfSquare) {
  const LboCase st(unit_square_grid(64), 4);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  EXPECT_LE(std::abs(st.basis.values()(1) - pi2) / pi2, 0.02);
  EXPECT_LE(std::abs(st.basis.values()(2) - pi2) / pi2, 0.02);
  EXPECT_LE(std::abs(st.basis.values()(3) - 2 * pi2) / (2 * pi2), 0.02);
}

TEST(Lbo, FullBasisOnThreeVertices) {
  const LboCase st(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"), 3);
  EXPECT_LE((st.basis.pinv() - Matrix(st.basis.modes().inverse())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lbo, DenseAndLanczosAgree) {
  LboOptions dense, lanczos;
  dense.solver = EigenSolverKind::Dense;
  lanczos.solver = EigenSolverKind::Lanczos;
  const LboCase a(notched_square(24), 20, dense);
  const LboCase b(notched_square(24), 20, lanczos);
  for (Index i = 0; i < 20; ++i)
    EXPECT_NEAR(a.basis.values()(i), b.basis.values()(i), 1e-8 * (1.0 + a.basis.values()(i)));
  expect_eigen_residual(b, 1e-7);
  // Degenerate eigenspaces may mix, so compare projectors on a random field.
  const Matrix f = randn(a.basis.nodes(), 1, 5);
  const Matrix pa = a.basis.modes().leftCols(19) * (a.basis.pinv().topRows(19) * f);
  const Matrix pb = b.basis.modes().leftCols(19) * (b.basis.pinv().topRows(19) * f);
  EXPECT_LE((pa - pb).norm(), 1e-6 * pa.norm());
}

TEST(Lbo, TetrahedralCube) {
  const LboCase st(unit_cube_tets(8), 5);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (Index i = 1; i <= 3; ++i) EXPECT_LE(std::abs(st.basis.values()(i) - pi2) / pi2, 0.05);
  expect_eigen_residual(st, 1e-7);
}

TEST(Lbo, RayleighQuotientOfMassNormalisedMode) {
  const LboCase st(unit_square_grid(16), 3);
  Vector phi = st.basis.modes().col(1);
  phi /= std::sqrt(phi.dot(st.m.matrix * phi));
  const Vector e = dirichlet_energy(st.s, Field(Matrix(phi), st.mesh.domain_id()));
  EXPECT_NEAR(e(0), st.basis.values()(1), 1e-9 * st.basis.values()(1));
}

TEST(EncodeDecode, Identities) {
  const LboCase st(notched_square(12), 10);
  const auto& b = st.basis;
  const std::string id = st.mesh.domain_id();
  for (Index k = 0; k < 10; ++k) {
    const Matrix c = encode(b, Field(Matrix(b.modes().col(k)), id));
    for (Index i = 0; i < 10; ++i) EXPECT_NEAR(c(i, 0), i == k ? 1.0 : 0.0, 1e-8);
  }
  EXPECT_EQ(encode(b, Field(Matrix::Zero(b.nodes(), 2), id)).cwiseAbs().maxCoeff(), 0.0);

  const Matrix coeff = randn(10, 3, 2);
  const Field v = decode(b, coeff);
  EXPECT_LE((encode(b, v) - coeff).norm(), 1e-8 * coeff.norm());
  EXPECT_LE((decode(b, encode(b, v)).values - v.values).norm(), 1e-8 * v.values.norm());

  const Matrix b1 = randn(10, 2, 3), b2 = randn(10, 2, 4);
  const Matrix lhs = decode(b, 2.5 * b1 + b2).values;
  const Matrix rhs = 2.5 * decode(b, b1).values + decode(b, b2).values;
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);

  // Idempotent projector.
  const Field f(randn(b.nodes(), 1, 6), id);
  const Field p1 = decode(b, encode(b, f));
  const Field p2 = decode(b, encode(b, p1));
  EXPECT_LE((p1.values - p2.values).norm(), 1e-8 * p1.values.norm());

  EXPECT_EQ(kind_of([&] { encode(b, Field(Matrix::Zero(3, 1), id)); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([&] { decode(b, Matrix::Zero(3, 1)); }), ErrorKind::DimensionMismatch);
}

TEST(Pod, IndicatorSnapshots) {
  Matrix e1 = Matrix::Zero(5, 1), e2 = Matrix::Zero(5, 1);
  e1(0, 0) = 1.0;
  e2(1, 0) = 1.0;
  const SpectralBasis b = pod_basis({Field(e1, "d"), Field(e2, "d")}, 2, PodOptions{false});
  EXPECT_EQ(b.kind(), BasisKind::POD);
  EXPECT_LE((b.modes().transpose() * b.modes() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
  for (const Matrix& e : {e1, e2}) {
    const Field r = decode(b, encode(b, Field(e, "d")));
    EXPECT_LE((r.values - e).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Pod, RankOneData) {
  Matrix f(4, 1);
  f << 1, -2, 3, 0.5;
  const std::vector<Field> snaps(3, Field(f, "d"));
  const SpectralBasis un = pod_basis(snaps, 1, PodOptions{false});
  EXPECT_NEAR(std::abs(un.modes().col(0).dot(f.col(0))) / f.norm(), 1.0, 1e-12);
  EXPECT_EQ(kind_of([&] { pod_basis(snaps, 1, PodOptions{true}); }), ErrorKind::RankDeficient);
  EXPECT_EQ(kind_of([&] { pod_basis(snaps, 4, PodOptions{false}); }), ErrorKind::TooFewSnapshots);
}

TEST(Pod, CentredDecodeAddsMeanAndErrorIsNested) {
  std::vector<Field> snaps;
  for (std::uint64_t s = 0; s < 30; ++s) {
    Matrix v = randn(20, 1, 100 + s) * 0.1;
    v.array() += 2.0;
    snaps.emplace_back(v, "d");
  }
  const SpectralBasis b = pod_basis(snaps, 12);
  EXPECT_EQ(b.mean().size(), 20);
  for (Index i = 0; i + 1 < b.size(); ++i) EXPECT_GE(b.values()(i), b.values()(i + 1));
  EXPECT_LE((b.modes().transpose() * b.modes() - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-10);
  Matrix held = randn(20, 1, 999) * 0.1;
  held.array() += 2.0;
  double prev = 1e300;
  for (Index k = 1; k <= 12; ++k) {
    const SpectralBasis t = b.truncated(k);
    const double err = (decode(t, encode(t, Field(held, "d"))).values - held).norm();
    EXPECT_LE(err, prev + 1e-12) << k;
    prev = err;
  }
  // Zero coefficients decode to the mean.
  EXPECT_LE((decode(b, Matrix::Zero(12, 1)).values.col(0) - b.mean()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Fourier, SmallCases) {
  const SpectralBasis one = fourier_basis(5, 1);
  EXPECT_EQ(one.size(), 1);
  EXPECT_LE(one.modes().col(0).maxCoeff() - one.modes().col(0).minCoeff(), 1e-15);

  const SpectralBasis f = fourier_basis(4, 3);
  Matrix expect(4, 3);
  expect << 1, 1, 0, 1, 0, 1, 1, -1, 0, 1, 0, -1;
  for (Index c = 0; c < 3; ++c) {
    const Vector e = expect.col(c).normalized();
    EXPECT_LE((f.modes().col(c) - e).cwiseAbs().maxCoeff(), 1e-15) << c;
  }
  const double w = 2 * std::numbers::pi;
  EXPECT_NEAR(f.values()(0), 0.0, 0.0);
  EXPECT_NEAR(f.values()(1), w * w, 1e-12);
  EXPECT_NEAR(f.values()(2), w * w, 1e-12);
  EXPECT_EQ(kind_of([] { fourier_basis(8, 4); }), ErrorKind::InvalidModeCount);
}

TEST(Fourier, CosineHasOneCoefficient) {
  const Index nt = 32;
  const SpectralBasis f = fourier_basis(nt, 7);
  Matrix v(nt, 1);
  for (Index i = 0; i < nt; ++i) v(i, 0) = std::cos(2 * std::numbers::pi * double(i) / nt);
  const Matrix c = encode(f, Field(v, f.domain_id()));
  for (Index k = 0; k < 7; ++k)
    if (k != 1) EXPECT_NEAR(c(k, 0), 0.0, 1e-8);
  EXPECT_GT(std::abs(c(1, 0)), 1.0);
  for (Index i = 0; i + 1 < 7; ++i) EXPECT_LE(f.values()(i), f.values()(i + 1) + 1e-12);
}

TEST(ProjectionBound, SpanTightnessAndNesting) {
  const LboCase st(unit_square_grid(24), 40);
  const std::string id = st.mesh.domain_id();
  const Index n = 8;
  Matrix coeff = Matrix::Zero(40, 1);
  coeff.topRows(n) = randn(n, 1, 7);
  const auto in_span = projection_bound_check(st.basis, st.s, st.m, decode(st.basis, coeff), n);
  EXPECT_LE(in_span.residual_norm_sq, 1e-20 + 1e-12 * in_span.bound);
  EXPECT_TRUE(in_span.pass);

  const auto tight = projection_bound_check(st.basis, st.s, st.m, Field(Matrix(st.basis.modes().col(n)), id), n);
  EXPECT_NEAR(tight.residual_norm_sq / tight.bound, 1.0, 1e-6);

  const Field f(randn(st.basis.nodes(), 1, 8), id);
  double prev = 1e300;
  for (Index k = 1; k < 40; ++k) {
    const auto r = projection_bound_check(st.basis, st.s, st.m, f, k);
    EXPECT_LE(r.residual_norm_sq, prev + 1e-12) << k;
    EXPECT_TRUE(r.pass) << k;
    prev = r.residual_norm_sq;
  }
  EXPECT_EQ(kind_of([&] { projection_bound_check(st.basis, st.s, st.m, f, 0); }), ErrorKind::ZeroEigenvalue);
  EXPECT_EQ(kind_of([&] { projection_bound_check(st.basis, st.s, st.m, f, 40); }), ErrorKind::InvalidModeCount);
}

TEST(BasisFile, RoundTripAndMagic) {
  const LboCase st(notched_square(10), 7);
  const auto path = std::filesystem::temp_directory_path() / "norm_test_basis.nsb";
  save_basis(st.basis, path);
  const SpectralBasis r = load_basis(path);
  EXPECT_EQ(r.kind(), BasisKind::LBO);
  EXPECT_TRUE(r.modes() == st.basis.modes());
  EXPECT_TRUE(r.pinv() == st.basis.pinv());
  EXPECT_TRUE(r.values() == st.basis.values());
  EXPECT_EQ(r.source_id(), st.mesh.content_hash());
  {
    std::fstream fs(path, std::ios::in | std::ios::out | std::ios::binary);
    fs.seekp(6);
    fs.put('9');
  }
  EXPECT_EQ(kind_of([&] { load_basis(path); }), ErrorKind::FormatVersion);
  std::filesystem::remove(path);
}
