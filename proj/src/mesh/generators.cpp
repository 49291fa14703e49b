#include "norm/mesh/generators.hpp"

#include <cmath>

#include "norm/error.hpp"

namespace norm {

Mesh unit_square_grid(int n) {
  require(n >= 1, ErrorKind::InvalidSpec, "grid resolution must be >= 1");
  const int side = n + 1;
  Vertices v(side * side, 3);
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i) v.row(j * side + i) << double(i) / n, double(j) / n, 0.0;
  Cells c(2 * n * n, 3);
  Eigen::Index t = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int v00 = j * side + i, v10 = v00 + 1, v01 = v00 + side, v11 = v01 + 1;
      c.row(t++) << v00, v10, v11;
      c.row(t++) << v00, v11, v01;
    }
  return Mesh(2, CellKind::Triangle, std::move(v), std::move(c));
}

SlitGeometry notch_slit(int n) {
  auto snap = [n](double x) { return std::round(x * n) / n; };
  const double x = snap(0.4);
  return {x, x + 1.0 / n, snap(0.3), snap(0.7)};
}

Mesh notched_square(int n) {
  require(n >= 5, ErrorKind::InvalidSpec, "notched mesh needs n >= 5");
  const Mesh grid = unit_square_grid(n);
  const SlitGeometry slit = notch_slit(n);
  const auto& cells = grid.cells();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < cells.rows(); ++c) {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (int k = 0; k < 3; ++k) centroid += grid.vertex(cells(c, k));
    centroid /= 3.0;
    const bool inside = centroid.x() > slit.x_lo && centroid.x() < slit.x_hi &&
                        centroid.y() > slit.y_lo && centroid.y() < slit.y_hi;
    if (!inside) keep.push_back(c);
  }
  // The slit is one element wide, so every grid vertex is still referenced.
  Cells kept(static_cast<Eigen::Index>(keep.size()), 3);
  for (std::size_t i = 0; i < keep.size(); ++i) kept.row(static_cast<Eigen::Index>(i)) = cells.row(keep[i]);
  return Mesh(2, CellKind::Triangle, grid.vertices(), std::move(kept));
}

Mesh unit_cube_tets(int n) {
  require(n >= 1, ErrorKind::InvalidSpec, "cube resolution must be >= 1");
  const int s = n + 1;
  auto id = [s](int i, int j, int k) { return (k * s + j) * s + i; };
  Vertices v(s * s * s, 3);
  for (int k = 0; k < s; ++k)
    for (int j = 0; j < s; ++j)
      for (int i = 0; i < s; ++i) v.row(id(i, j, k)) << double(i) / n, double(j) / n, double(k) / n;
  // Kuhn subdivision: six tetrahedra sharing the main diagonal of each cube.
  static constexpr int kPaths[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  Cells c(6 * n * n * n, 4);
  Eigen::Index t = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& path : kPaths) {
          int p[3] = {i, j, k};
          c(t, 0) = id(p[0], p[1], p[2]);
          for (int step = 0; step < 3; ++step) {
            ++p[path[step]];
            c(t, step + 1) = id(p[0], p[1], p[2]);
          }
          ++t;
        }
  return Mesh(3, CellKind::Tetrahedron, std::move(v), std::move(c));
}

}  // namespace norm
