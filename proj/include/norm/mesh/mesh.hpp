#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "norm/hash.hpp"
#include "norm/linalg.hpp"

namespace norm {

enum class CellKind { Triangle, Tetrahedron };

using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Cells = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kMinTriangleArea = 1e-12;
inline constexpr double kMinTetVolume = 1e-14;
inline constexpr double kDuplicateVertexTol = 1e-12;

// A discrete manifold: vertex coordinates (always stored with three
// components; dim == 2 meshes keep z = 0) plus simplex connectivity.
// Immutable after construction; the constructor enforces index range and
// positive cell measure.
class Mesh {
 public:
  Mesh(int dim, CellKind kind, Vertices vertices, Cells cells);

  int dim() const { return dim_; }
  CellKind cell_kind() const { return kind_; }
  Eigen::Index num_vertices() const { return vertices_.rows(); }
  Eigen::Index num_cells() const { return cells_.rows(); }
  int vertices_per_cell() const { return kind_ == CellKind::Triangle ? 3 : 4; }

  const Vertices& vertices() const { return vertices_; }
  const Cells& cells() const { return cells_; }
  Eigen::Vector3d vertex(Eigen::Index i) const { return vertices_.row(i).transpose(); }

  double cell_measure(Eigen::Index c) const;
  double total_measure() const;

  // SHA-256 over kind, dimension, coordinates and connectivity.
  const Digest& content_hash() const { return hash_; }
  std::string domain_id() const { return to_hex(hash_); }

  // Vertices on the topological boundary (edges with one incident triangle,
  // faces with one incident tetrahedron), ascending.
  std::vector<std::int32_t> boundary_vertices() const;

 private:
  int dim_;
  CellKind kind_;
  Vertices vertices_;
  Cells cells_;
  Digest hash_;
};

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c);
double tet_volume(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                  const Eigen::Vector3d& d);

// Midpoint subdivision: every triangle becomes four. Tetrahedra are rejected
// with UnsupportedCellKind.
Mesh refine(const Mesh& mesh);

// Values at the new midpoint vertices of refine(mesh) are the averages of the
// edge endpoints; existing vertices keep their values. Matches the P1
// interpolant on the refined mesh.
Matrix prolongate_to_refined(const Mesh& mesh, const Matrix& values);

}  // namespace norm
