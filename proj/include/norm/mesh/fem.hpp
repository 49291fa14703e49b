#pragma once

#include <vector>

#include "norm/field.hpp"
#include "norm/linalg.hpp"
#include "norm/mesh/mesh.hpp"

namespace norm {

// Symmetric sparse operator on mesh vertices. Both triangles of the pattern
// are stored so products need no special casing.
struct SparseSymMatrix {
  SparseMatrix matrix;

  Eigen::Index dimension() const { return matrix.rows(); }
  bool is_diagonal() const;
  Vector diagonal() const { return matrix.diagonal(); }
  double max_abs() const;
};

// Positive semi-definite P1 stiffness. Triangles use the cotangent formula
// (off-diagonal -1/2 (cot a + cot b)), tetrahedra the barycentric-gradient
// form vol * G G^T. Rows sum to zero.
SparseSymMatrix cotangent_stiffness(const Mesh& mesh);

// Diagonal mass: each vertex receives measure / (vertices per cell) from
// every incident cell.
SparseSymMatrix lumped_mass(const Mesh& mesh);

// Stiffness for -div(k grad u) with one coefficient per cell.
SparseSymMatrix weighted_stiffness(const Mesh& mesh, const Vector& cell_coefficient);

// f^T S f per channel.
Vector dirichlet_energy(const SparseSymMatrix& s, const Field& f);

}  // namespace norm
