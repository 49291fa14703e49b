#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "norm/error.hpp"
#include "norm/mesh/fem.hpp"
#include "norm/mesh/generators.hpp"
#include "norm/mesh/io.hpp"
#include "norm/rng.hpp"

using namespace norm;
using Index = Eigen::Index;

namespace {

Mesh one_triangle() { return parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"); }

Field sample(const Mesh& mesh, double (*f)(double, double)) {
  Matrix v(mesh.num_vertices(), 1);
  for (Index i = 0; i < v.rows(); ++i) v(i, 0) = f(mesh.vertices()(i, 0), mesh.vertices()(i, 1));
  return Field(v, mesh.domain_id());
}

double sinsin(double x, double y) { return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y); }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

}  // namespace

TEST(MeshIo, SingleTriangleOff) {
  const Mesh m = one_triangle();
  EXPECT_EQ(m.num_vertices(), 3);
  EXPECT_EQ(m.num_cells(), 1);
  EXPECT_EQ(m.cell_kind(), CellKind::Triangle);
}

TEST(MeshIo, IndexOutOfRange) {
  EXPECT_EQ(kind_of([] { parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 5\n"); }), ErrorKind::IndexOutOfRange);
}

TEST(MeshIo, MalformedFilesAreParseErrors) {
  EXPECT_EQ(kind_of([] { parse_off("OFF\n3 1 0\n0 0 0\n1 0\n"); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([] { parse_mshjson("{\"dim\": 2, \"cell_kind\": \"tri\"}"); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([] { parse_mshjson("not json"); }), ErrorKind::ParseError);
}

TEST(MeshIo, DegenerateCellRejected) {
  EXPECT_EQ(kind_of([] { parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n2 0 0\n3 0 1 2\n"); }), ErrorKind::DegenerateCell);
}

TEST(MeshIo, ObjIgnoresNormalsAndTextures) {
  const Mesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\nf 1/1/1 2/1/1 3/1/1\n");
  EXPECT_EQ(m.num_vertices(), 3);
  EXPECT_EQ(m.num_cells(), 1);
  EXPECT_DOUBLE_EQ(m.total_measure(), 0.5);
}

TEST(MeshIo, MshjsonRoundTripIsBitwise) {
  const Mesh m = unit_square_grid(16);
  const Mesh r = parse_mshjson(to_mshjson(m));
  EXPECT_EQ(r.num_vertices(), 289);
  EXPECT_TRUE(r.vertices() == m.vertices());
  EXPECT_TRUE(r.cells() == m.cells());
  EXPECT_EQ(r.content_hash(), m.content_hash());

  const auto path = std::filesystem::temp_directory_path() / "norm_test_grid.json";
  save_mesh(m, path, MeshFormat::MSHJSON);
  const Mesh f = load_mesh(path);
  EXPECT_TRUE(f.vertices() == m.vertices());
  std::filesystem::remove(path);
}

TEST(MeshIo, TetMshjson) {
  const Mesh m = parse_mshjson(
      R"({"dim": 3, "cell_kind": "tet", "vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]], "cells": [[0,1,2,3]]})");
  EXPECT_EQ(m.cell_kind(), CellKind::Tetrahedron);
  EXPECT_NEAR(m.total_measure(), 1.0 / 6.0, 1e-15);
}

TEST(Stiffness, SingleRightTriangleWeights) {
  const auto s = cotangent_stiffness(one_triangle()).matrix;
  EXPECT_NEAR(s.coeff(0, 1), -0.5, 1e-15);
  EXPECT_NEAR(s.coeff(0, 2), -0.5, 1e-15);
  EXPECT_NEAR(s.coeff(1, 2), 0.0, 1e-15);
  EXPECT_NEAR(s.coeff(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(s.coeff(1, 1), 0.5, 1e-15);
}

TEST(Stiffness, SymmetricKernelPsd) {
  for (const Mesh& m : {unit_square_grid(8), notched_square(20), unit_cube_tets(3), refine(notched_square(10))}) {
    const auto s = cotangent_stiffness(m);
    const double mx = s.max_abs();
    const Matrix d(s.matrix);
    EXPECT_LE((d - d.transpose()).cwiseAbs().maxCoeff(), 1e-12 * mx);
    EXPECT_LE((s.matrix * Vector::Ones(m.num_vertices())).cwiseAbs().maxCoeff(), 1e-10 * mx);
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
      Vector x(m.num_vertices());
      for (auto& v : x) v = rng.normal();
      EXPECT_GE(x.dot(s.matrix * x), -1e-9 * x.squaredNorm());
    }
  }
}

TEST(Stiffness, DirichletEnergyOfSinSin) {
  const Mesh m = unit_square_grid(32);
  const Vector e = dirichlet_energy(cotangent_stiffness(m), sample(m, sinsin));
  const double exact = std::numbers::pi * std::numbers::pi / 2.0;
  EXPECT_LE(std::abs(e(0) - exact) / exact, 0.01);
}

TEST(Stiffness, EnergyConvergesUnderRefinement) {
  Mesh m = unit_square_grid(4);
  const double exact = std::numbers::pi * std::numbers::pi / 2.0;
  double prev = 1e300;
  for (int level = 0; level < 4; ++level) {
    const double err = std::abs(dirichlet_energy(cotangent_stiffness(m), sample(m, sinsin))(0) - exact);
    EXPECT_LT(err, prev) << "level " << level;
    prev = err;
    m = refine(m);
  }
}

TEST(Stiffness, ConstantHasZeroEnergy) {
  const Mesh m = notched_square(12);
  const Field c(Matrix::Constant(m.num_vertices(), 2, 3.5), m.domain_id());
  const Vector e = dirichlet_energy(cotangent_stiffness(m), c);
  EXPECT_NEAR(e(0), 0.0, 1e-10);
  EXPECT_NEAR(e(1), 0.0, 1e-10);
}

TEST(Stiffness, TetMatchesP1Gradients) {
  // Reference tet: S = vol * G G^T with G the barycentric gradients.
  const Mesh m = parse_mshjson(
      R"({"dim": 3, "cell_kind": "tet", "vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]], "cells": [[0,1,2,3]]})");
  Eigen::Matrix<double, 4, 3> g;
  g << -1, -1, -1, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  const Eigen::Matrix4d ref = (g * g.transpose()) / 6.0;
  const Matrix s(cotangent_stiffness(m).matrix);
  EXPECT_LE((s - Matrix(ref)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Mass, SingleTriangle) {
  const Vector d = lumped_mass(one_triangle()).diagonal();
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(d(i), 1.0 / 6.0, 1e-16);
}

TEST(Mass, TraceIsMeasure) {
  EXPECT_NEAR(lumped_mass(unit_square_grid(16)).diagonal().sum(), 1.0, 1e-10);
  const Mesh n = notched_square(20);
  EXPECT_NEAR(lumped_mass(n).diagonal().sum(), n.total_measure(), 1e-10);
  EXPECT_NEAR(lumped_mass(refine(n)).diagonal().sum(), n.total_measure(), 1e-10);
  EXPECT_GT(lumped_mass(n).diagonal().minCoeff(), 0.0);
  EXPECT_NEAR(lumped_mass(unit_cube_tets(2)).diagonal().sum(), 1.0, 1e-10);
}

TEST(Refine, Counts) {
  const Mesh one = refine(one_triangle());
  EXPECT_EQ(one.num_cells(), 4);
  EXPECT_EQ(one.num_vertices(), 6);
  const Mesh sq = refine(unit_square_grid(1));
  EXPECT_EQ(sq.num_cells(), 8);
  EXPECT_EQ(sq.num_vertices(), 9);
  const Mesh g = unit_square_grid(32);
  const Mesh r = refine(g);
  EXPECT_EQ(r.num_vertices(), 65 * 65);
  EXPECT_NEAR(r.total_measure(), g.total_measure(), 1e-12);
}

TEST(Refine, TetsUnsupported) {
  EXPECT_EQ(kind_of([] { refine(unit_cube_tets(1)); }), ErrorKind::UnsupportedCellKind);
}

TEST(Refine, ProlongationReproducesLinearFunctions) {
  const Mesh m = notched_square(10);
  const Mesh r = refine(m);
  auto lin = [](const Eigen::Vector3d& p) { return 0.3 - 2.0 * p.x() + 0.7 * p.y(); };
  Matrix v(m.num_vertices(), 1);
  for (Index i = 0; i < v.rows(); ++i) v(i, 0) = lin(m.vertex(i));
  const Matrix p = prolongate_to_refined(m, v);
  ASSERT_EQ(p.rows(), r.num_vertices());
  for (Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p(i, 0), lin(r.vertex(i)), 1e-13);
}

TEST(Generators, GridLayout) {
  const Mesh g = unit_square_grid(4);
  EXPECT_EQ(g.num_vertices(), 25);
  EXPECT_EQ(g.num_cells(), 32);
  EXPECT_DOUBLE_EQ(g.vertex(2 * 5 + 3).x(), 0.75);
  EXPECT_DOUBLE_EQ(g.vertex(2 * 5 + 3).y(), 0.5);
  EXPECT_EQ(g.boundary_vertices().size(), 16u);
}

TEST(Generators, NotchRemovesOneColumnOfCells) {
  const int n = 20;
  const Mesh m = notched_square(n);
  const auto slit = notch_slit(n);
  EXPECT_NEAR(slit.x_lo, 0.4, 1e-12);
  EXPECT_NEAR(slit.y_lo, 0.3, 1e-12);
  EXPECT_NEAR(slit.y_hi, 0.7, 1e-12);
  EXPECT_NEAR(slit.x_hi - slit.x_lo, 1.0 / n, 1e-12);
  // 8 cell rows of 2 triangles removed.
  EXPECT_EQ(m.num_cells(), 2 * n * n - 16);
  EXPECT_NEAR(m.total_measure(), 1.0 - 0.4 / n, 1e-12);
  // The slit adds interior boundary vertices beyond the 4n outer ones.
  EXPECT_GT(m.boundary_vertices().size(), 4u * n);
}

TEST(Vtk, TriangleAndTetCellTypes) {
  const Mesh tri = one_triangle();
  const std::string t = to_vtk(tri, Matrix::Ones(3, 1), "u");
  EXPECT_NE(t.find("DATASET UNSTRUCTURED_GRID"), std::string::npos);
  EXPECT_NE(t.find("CELL_TYPES 1\n5\n"), std::string::npos);
  EXPECT_NE(t.find("POINT_DATA 3\nSCALARS u double 1"), std::string::npos);

  const Mesh tet = unit_cube_tets(1);
  const std::string v = to_vtk(tet, Matrix::Zero(tet.num_vertices(), 3), "w");
  EXPECT_NE(v.find("CELL_TYPES 6\n10\n"), std::string::npos);
  EXPECT_NE(v.find("VECTORS w double"), std::string::npos);

  EXPECT_EQ(kind_of([&] { to_vtk(tri, Matrix::Ones(4, 1)); }), ErrorKind::DimensionMismatch);
}
