#include "norm/mesh/fem.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "norm/error.hpp"

namespace norm {
namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void add_pair(Triplets& t, int i, int j, double w) {
  // Off-diagonal -w, diagonal +w: keeps every row sum exactly zero.
  t.emplace_back(i, j, -w);
  t.emplace_back(j, i, -w);
  t.emplace_back(i, i, w);
  t.emplace_back(j, j, w);
}

void triangle_stiffness(const Mesh& mesh, Eigen::Index c, double kappa, Triplets& t) {
  const auto& cells = mesh.cells();
  const int idx[3] = {cells(c, 0), cells(c, 1), cells(c, 2)};
  const Eigen::Vector3d p[3] = {mesh.vertex(idx[0]), mesh.vertex(idx[1]), mesh.vertex(idx[2])};
  const double area = triangle_area(p[0], p[1], p[2]);
  if (!(area >= kMinTriangleArea))
    fail(ErrorKind::DegenerateCell, "cotangent undefined on zero-area triangle " + std::to_string(c));
  for (int k = 0; k < 3; ++k) {
    const int i = (k + 1) % 3, j = (k + 2) % 3;
    const Eigen::Vector3d u = p[i] - p[k], v = p[j] - p[k];
    const double cot = u.dot(v) / u.cross(v).norm();
    add_pair(t, idx[i], idx[j], 0.5 * kappa * cot);
  }
}

void tet_stiffness(const Mesh& mesh, Eigen::Index c, double kappa, Triplets& t) {
  const auto& cells = mesh.cells();
  int idx[4];
  Eigen::Vector3d p[4];
  for (int k = 0; k < 4; ++k) {
    idx[k] = cells(c, k);
    p[k] = mesh.vertex(idx[k]);
  }
  Eigen::Matrix3d jac;
  jac.col(0) = p[1] - p[0];
  jac.col(1) = p[2] - p[0];
  jac.col(2) = p[3] - p[0];
  const double vol = std::abs(jac.determinant()) / 6.0;
  if (!(vol >= kMinTetVolume)) fail(ErrorKind::DegenerateCell, "zero-volume tetrahedron " + std::to_string(c));
  // Rows of jac^{-1} are the gradients of barycentric coordinates 1..3.
  const Eigen::Matrix3d inv = jac.inverse();
  Eigen::Matrix<double, 4, 3> g;
  g.row(1) = inv.row(0);
  g.row(2) = inv.row(1);
  g.row(3) = inv.row(2);
  g.row(0) = -(g.row(1) + g.row(2) + g.row(3));
  const Eigen::Matrix4d ke = kappa * vol * g * g.transpose();
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) add_pair(t, idx[a], idx[b], -ke(a, b));
}

SparseSymMatrix assemble(const Mesh& mesh, const Vector* coeff) {
  Triplets t;
  t.reserve(static_cast<std::size_t>(mesh.num_cells()) * (mesh.cell_kind() == CellKind::Triangle ? 12 : 24));
  for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
    const double kappa = coeff ? (*coeff)(c) : 1.0;
    if (mesh.cell_kind() == CellKind::Triangle)
      triangle_stiffness(mesh, c, kappa, t);
    else
      tet_stiffness(mesh, c, kappa, t);
  }
  SparseSymMatrix s;
  s.matrix.resize(mesh.num_vertices(), mesh.num_vertices());
  s.matrix.setFromTriplets(t.begin(), t.end());
  s.matrix.makeCompressed();
  return s;
}

}  // namespace

bool SparseSymMatrix::is_diagonal() const {
  for (Eigen::Index k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) return false;
  return true;
}

double SparseSymMatrix::max_abs() const {
  double m = 0.0;
  for (Eigen::Index k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

SparseSymMatrix cotangent_stiffness(const Mesh& mesh) { return assemble(mesh, nullptr); }

SparseSymMatrix weighted_stiffness(const Mesh& mesh, const Vector& cell_coefficient) {
  require(cell_coefficient.size() == mesh.num_cells(), ErrorKind::DimensionMismatch,
          "one coefficient per cell expected");
  return assemble(mesh, &cell_coefficient);
}

SparseSymMatrix lumped_mass(const Mesh& mesh) {
  Vector diag = Vector::Zero(mesh.num_vertices());
  const double share = 1.0 / mesh.vertices_per_cell();
  for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
    const double m = mesh.cell_measure(c);
    const double floor = mesh.cell_kind() == CellKind::Triangle ? kMinTriangleArea : kMinTetVolume;
    if (!(m >= floor)) fail(ErrorKind::DegenerateCell, "degenerate cell " + std::to_string(c));
    for (int k = 0; k < mesh.vertices_per_cell(); ++k) diag(mesh.cells()(c, k)) += m * share;
  }
  SparseSymMatrix out;
  out.matrix.resize(diag.size(), diag.size());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(diag.size()));
  for (Eigen::Index i = 0; i < diag.size(); ++i) t.emplace_back(i, i, diag(i));
  out.matrix.setFromTriplets(t.begin(), t.end());
  return out;
}

Vector dirichlet_energy(const SparseSymMatrix& s, const Field& f) {
  require(f.nodes() == s.dimension(), ErrorKind::DimensionMismatch,
          "field has " + std::to_string(f.nodes()) + " nodes, operator " + std::to_string(s.dimension()));
  Vector out(f.channels());
  for (Eigen::Index c = 0; c < f.channels(); ++c) {
    const Vector col = f.values.col(c);
    out(c) = col.dot(s.matrix * col);
  }
  return out;
}

}  // namespace norm
