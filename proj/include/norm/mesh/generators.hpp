#pragma once

#include <cstdint>
#include <vector>

#include "norm/mesh/mesh.hpp"

namespace norm {

// Unit square split into n x n cells, each cut into two right triangles
// along the (i,j)-(i+1,j+1) diagonal. (n+1)^2 vertices, index j*(n+1)+i.
Mesh unit_square_grid(int n);

// Unit square grid with an interior slit one element wide: cells with
// centroid in [x_s, x_s + h] x [y_lo, y_hi] are removed, where x_s, y_lo and
// y_hi are 0.4, 0.3, 0.7 snapped to the nearest grid line.
Mesh notched_square(int n);

struct SlitGeometry {
  double x_lo, x_hi, y_lo, y_hi;
};
SlitGeometry notch_slit(int n);

// Unit cube, n^3 cells, each split into six tetrahedra around its diagonal.
Mesh unit_cube_tets(int n);

}  // namespace norm
