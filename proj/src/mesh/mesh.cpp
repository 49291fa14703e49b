#include "norm/mesh/mesh.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>

#include <Eigen/Geometry>

#include "norm/error.hpp"
#include "norm/log.hpp"

namespace norm {

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

double tet_volume(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                  const Eigen::Vector3d& d) {
  return std::abs((b - a).dot((c - a).cross(d - a))) / 6.0;
}

namespace {

void warn_on_duplicates(const Vertices& v) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(v.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (int k = 0; k < 3; ++k)
      if (v(a, k) != v(b, k)) return v(a, k) < v(b, k);
    return a < b;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    // Sorted by x first, so scan forward while x stays within tolerance.
    for (std::size_t j = i; j < order.size(); ++j) {
      const auto p = order[i - 1], q = order[j];
      if (v(q, 0) - v(p, 0) > kDuplicateVertexTol) break;
      if ((v.row(p) - v.row(q)).cwiseAbs().maxCoeff() <= kDuplicateVertexTol) {
        log::warn("duplicate vertices " + std::to_string(p) + " and " + std::to_string(q));
        return;
      }
    }
  }
}

Digest hash_mesh(int dim, CellKind kind, const Vertices& v, const Cells& c) {
  Sha256 h;
  h.update(kind == CellKind::Triangle ? "tri" : "tet");
  h.update_u64(static_cast<std::uint64_t>(dim));
  h.update_u64(static_cast<std::uint64_t>(v.rows()));
  h.update_u64(static_cast<std::uint64_t>(c.rows()));
  h.update_f64(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
  for (Eigen::Index i = 0; i < c.size(); ++i) h.update_u64(static_cast<std::uint64_t>(c.data()[i]));
  return h.finish();
}

}  // namespace

Mesh::Mesh(int dim, CellKind kind, Vertices vertices, Cells cells)
    : dim_(dim), kind_(kind), vertices_(std::move(vertices)), cells_(std::move(cells)) {
  require(dim_ == 2 || dim_ == 3, ErrorKind::ParseError, "mesh dimension must be 2 or 3");
  require(cells_.cols() == vertices_per_cell(), ErrorKind::ParseError,
          "cell arity does not match the cell kind");
  require(kind_ == CellKind::Triangle || dim_ == 3, ErrorKind::ParseError,
          "tetrahedral meshes need three coordinates");
  require(vertices_.allFinite(), ErrorKind::ParseError, "non-finite vertex coordinate");
  const auto n = vertices_.rows();
  for (Eigen::Index c = 0; c < cells_.rows(); ++c) {
    for (Eigen::Index k = 0; k < cells_.cols(); ++k) {
      const auto idx = cells_(c, k);
      if (idx < 0 || idx >= n)
        fail(ErrorKind::IndexOutOfRange, "cell " + std::to_string(c) + " references vertex " +
                                             std::to_string(idx) + " of " + std::to_string(n));
    }
    const double measure = cell_measure(c);
    const double floor = kind_ == CellKind::Triangle ? kMinTriangleArea : kMinTetVolume;
    if (!(measure >= floor))
      fail(ErrorKind::DegenerateCell, "cell " + std::to_string(c) + " has measure " + std::to_string(measure));
  }
  warn_on_duplicates(vertices_);
  hash_ = hash_mesh(dim_, kind_, vertices_, cells_);
}

double Mesh::cell_measure(Eigen::Index c) const {
  if (kind_ == CellKind::Triangle)
    return triangle_area(vertex(cells_(c, 0)), vertex(cells_(c, 1)), vertex(cells_(c, 2)));
  return tet_volume(vertex(cells_(c, 0)), vertex(cells_(c, 1)), vertex(cells_(c, 2)), vertex(cells_(c, 3)));
}

double Mesh::total_measure() const {
  double s = 0.0;
  for (Eigen::Index c = 0; c < cells_.rows(); ++c) s += cell_measure(c);
  return s;
}

std::vector<std::int32_t> Mesh::boundary_vertices() const {
  std::vector<std::int32_t> out;
  if (kind_ == CellKind::Triangle) {
    std::map<std::array<std::int32_t, 2>, int> edges;
    for (Eigen::Index c = 0; c < cells_.rows(); ++c)
      for (int k = 0; k < 3; ++k) {
        auto a = cells_(c, k), b = cells_(c, (k + 1) % 3);
        ++edges[{std::min(a, b), std::max(a, b)}];
      }
    for (const auto& [e, count] : edges)
      if (count == 1) {
        out.push_back(e[0]);
        out.push_back(e[1]);
      }
  } else {
    std::map<std::array<std::int32_t, 3>, int> faces;
    for (Eigen::Index c = 0; c < cells_.rows(); ++c)
      for (int skip = 0; skip < 4; ++skip) {
        std::array<std::int32_t, 3> f{};
        int w = 0;
        for (int k = 0; k < 4; ++k)
          if (k != skip) f[w++] = cells_(c, k);
        std::sort(f.begin(), f.end());
        ++faces[f];
      }
    for (const auto& [f, count] : faces)
      if (count == 1) out.insert(out.end(), f.begin(), f.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

// Midpoint vertex ids in order of first appearance over cells, so the
// refined numbering is deterministic.
struct EdgeMidpoints {
  std::map<std::array<std::int32_t, 2>, std::int32_t> index;
  std::vector<std::array<std::int32_t, 2>> order;
};

EdgeMidpoints collect_edges(const Mesh& mesh) {
  EdgeMidpoints em;
  auto next = static_cast<std::int32_t>(mesh.num_vertices());
  const auto& cells = mesh.cells();
  for (Eigen::Index c = 0; c < cells.rows(); ++c)
    for (int k = 0; k < 3; ++k) {
      auto a = cells(c, k), b = cells(c, (k + 1) % 3);
      std::array<std::int32_t, 2> key{std::min(a, b), std::max(a, b)};
      if (em.index.emplace(key, next).second) {
        em.order.push_back(key);
        ++next;
      }
    }
  return em;
}

}  // namespace

Mesh refine(const Mesh& mesh) {
  require(mesh.cell_kind() == CellKind::Triangle, ErrorKind::UnsupportedCellKind,
          "refine supports triangle meshes only");
  const EdgeMidpoints em = collect_edges(mesh);
  const auto n0 = mesh.num_vertices();
  Vertices v(n0 + static_cast<Eigen::Index>(em.order.size()), 3);
  v.topRows(n0) = mesh.vertices();
  for (std::size_t e = 0; e < em.order.size(); ++e)
    v.row(n0 + static_cast<Eigen::Index>(e)) =
        0.5 * (mesh.vertices().row(em.order[e][0]) + mesh.vertices().row(em.order[e][1]));

  const auto& cells = mesh.cells();
  Cells out(cells.rows() * 4, 3);
  auto mid = [&](std::int32_t a, std::int32_t b) { return em.index.at({std::min(a, b), std::max(a, b)}); };
  for (Eigen::Index c = 0; c < cells.rows(); ++c) {
    const auto a = cells(c, 0), b = cells(c, 1), d = cells(c, 2);
    const auto ab = mid(a, b), bd = mid(b, d), da = mid(d, a);
    out.row(4 * c + 0) << a, ab, da;
    out.row(4 * c + 1) << ab, b, bd;
    out.row(4 * c + 2) << da, bd, d;
    out.row(4 * c + 3) << ab, bd, da;
  }
  return Mesh(mesh.dim(), CellKind::Triangle, std::move(v), std::move(out));
}

Matrix prolongate_to_refined(const Mesh& mesh, const Matrix& values) {
  require(mesh.cell_kind() == CellKind::Triangle, ErrorKind::UnsupportedCellKind,
          "prolongation supports triangle meshes only");
  require(values.rows() == mesh.num_vertices(), ErrorKind::DimensionMismatch,
          "field node count does not match the mesh");
  const EdgeMidpoints em = collect_edges(mesh);
  const auto n0 = mesh.num_vertices();
  Matrix out(n0 + static_cast<Eigen::Index>(em.order.size()), values.cols());
  out.topRows(n0) = values;
  for (std::size_t e = 0; e < em.order.size(); ++e)
    out.row(n0 + static_cast<Eigen::Index>(e)) = 0.5 * (values.row(em.order[e][0]) + values.row(em.order[e][1]));
  return out;
}

}  // namespace norm
