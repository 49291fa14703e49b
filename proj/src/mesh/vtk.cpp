#include <sstream>

#include "norm/error.hpp"
#include "norm/mesh/io.hpp"

namespace norm {

std::string to_vtk(const Mesh& mesh, const Matrix& field, const std::string& name) {
  require(field.rows() == mesh.num_vertices(), ErrorKind::DimensionMismatch,
          "field has " + std::to_string(field.rows()) + " nodes but the mesh has " +
              std::to_string(mesh.num_vertices()) + " vertices");
  require(field.cols() >= 1, ErrorKind::DimensionMismatch, "field has no channels");
  const Eigen::Index nv = mesh.num_vertices(), nc = mesh.num_cells();
  const int vpc = mesh.vertices_per_cell();
  std::ostringstream os;
  os.precision(17);
  os << "# vtk DataFile Version 3.0\n" << name << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << nv << " double\n";
  for (Eigen::Index i = 0; i < nv; ++i)
    os << mesh.vertices()(i, 0) << ' ' << mesh.vertices()(i, 1) << ' ' << mesh.vertices()(i, 2) << '\n';
  os << "CELLS " << nc << ' ' << nc * (vpc + 1) << '\n';
  for (Eigen::Index c = 0; c < nc; ++c) {
    os << vpc;
    for (int k = 0; k < vpc; ++k) os << ' ' << mesh.cells()(c, k);
    os << '\n';
  }
  os << "CELL_TYPES " << nc << '\n';
  const int type = mesh.cell_kind() == CellKind::Triangle ? 5 : 10;
  for (Eigen::Index c = 0; c < nc; ++c) os << type << '\n';
  os << "POINT_DATA " << nv << '\n';
  const Eigen::Index ch = field.cols();
  if (ch == 2 || ch == 3) {
    os << "VECTORS " << name << " double\n";
    for (Eigen::Index i = 0; i < nv; ++i) os << field(i, 0) << ' ' << field(i, 1) << ' ' << (ch == 3 ? field(i, 2) : 0.0) << '\n';
    return os.str();
  }
  for (Eigen::Index k = 0; k < ch; ++k) {
    os << "SCALARS " << (ch == 1 ? name : name + "_" + std::to_string(k)) << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < nv; ++i) os << field(i, k) << '\n';
  }
  return os.str();
}

}  // namespace norm
