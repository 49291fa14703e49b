#include "norm/mesh/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "norm/error.hpp"

namespace norm {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Whitespace tokenizer that drops '#' comments.
class Tokens {
 public:
  explicit Tokens(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
      const char c = text[i];
      if (c == '#') {
        while (i < text.size() && text[i] != '\n') ++i;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else {
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != '#') ++j;
        toks_.emplace_back(text.substr(i, j - i));
        i = j;
      }
    }
  }

  bool done() const { return pos_ >= toks_.size(); }
  std::string_view next() {
    require(!done(), ErrorKind::ParseError, "unexpected end of input");
    return toks_[pos_++];
  }
  double next_double() { return to_double(next()); }
  long long next_int() { return to_int(next()); }

  static double to_double(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && p == s.data() + s.size(), ErrorKind::ParseError,
            "expected a number, got '" + std::string(s) + "'");
    return v;
  }
  static long long to_int(std::string_view s) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && p == s.data() + s.size(), ErrorKind::ParseError,
            "expected an integer, got '" + std::string(s) + "'");
    return v;
  }

 private:
  std::vector<std::string_view> toks_;
  std::size_t pos_ = 0;
};

std::int32_t checked_index(long long idx, Eigen::Index n) {
  if (idx < 0 || idx >= n)
    fail(ErrorKind::IndexOutOfRange, "vertex index " + std::to_string(idx) + " outside [0, " + std::to_string(n) + ")");
  return static_cast<std::int32_t>(idx);
}

}  // namespace

std::optional<MeshFormat> format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".off") return MeshFormat::OFF;
  if (ext == ".obj") return MeshFormat::OBJ;
  if (ext == ".json" || ext == ".mshjson") return MeshFormat::MSHJSON;
  return std::nullopt;
}

Mesh parse_off(std::string_view text) {
  Tokens t(text);
  auto head = t.next();
  require(head == "OFF", ErrorKind::ParseError, "missing OFF header");
  const long long nv = t.next_int(), nf = t.next_int();
  t.next_int();  // edge count, unused
  require(nv >= 0 && nf >= 0, ErrorKind::ParseError, "negative element counts");
  Vertices v(nv, 3);
  for (long long i = 0; i < nv; ++i)
    for (int k = 0; k < 3; ++k) v(i, k) = t.next_double();
  Cells c(nf, 3);
  for (long long f = 0; f < nf; ++f) {
    const long long arity = t.next_int();
    require(arity == 3, ErrorKind::ParseError, "only triangular OFF faces are supported");
    for (int k = 0; k < 3; ++k) c(f, k) = checked_index(t.next_int(), nv);
  }
  return Mesh(3, CellKind::Triangle, std::move(v), std::move(c));
}

Mesh parse_obj(std::string_view text) {
  std::vector<double> coords;
  std::vector<long long> faces;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    Tokens t(line);
    if (t.done()) continue;
    const auto key = t.next();
    if (key == "v") {
      for (int k = 0; k < 3; ++k) coords.push_back(t.next_double());
    } else if (key == "f") {
      std::vector<long long> idx;
      while (!t.done()) {
        auto tok = t.next();
        tok = tok.substr(0, tok.find('/'));
        long long i = Tokens::to_int(tok);
        const auto nv = static_cast<long long>(coords.size() / 3);
        // OBJ is 1-based; negative indices count back from the latest vertex.
        idx.push_back(i < 0 ? nv + i : i - 1);
      }
      require(idx.size() == 3, ErrorKind::ParseError, "only triangular OBJ faces are supported");
      faces.insert(faces.end(), idx.begin(), idx.end());
    }
  }
  const auto nv = static_cast<Eigen::Index>(coords.size() / 3);
  Vertices v(nv, 3);
  for (Eigen::Index i = 0; i < nv; ++i)
    for (int k = 0; k < 3; ++k) v(i, k) = coords[static_cast<std::size_t>(3 * i + k)];
  Cells c(static_cast<Eigen::Index>(faces.size() / 3), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) c.data()[i] = checked_index(faces[i], nv);
  return Mesh(3, CellKind::Triangle, std::move(v), std::move(c));
}

Mesh parse_mshjson(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("MSHJSON: ") + e.what());
  }
  try {
    const int dim = j.at("dim").get<int>();
    const auto kind_s = j.at("cell_kind").get<std::string>();
    require(kind_s == "tri" || kind_s == "tet", ErrorKind::ParseError, "cell_kind must be tri or tet");
    const CellKind kind = kind_s == "tri" ? CellKind::Triangle : CellKind::Tetrahedron;
    const auto& jv = j.at("vertices");
    const auto& jc = j.at("cells");
    Vertices v = Vertices::Zero(static_cast<Eigen::Index>(jv.size()), 3);
    for (std::size_t i = 0; i < jv.size(); ++i) {
      const auto& p = jv[i];
      require(p.size() == 2 || p.size() == 3, ErrorKind::ParseError, "vertex needs 2 or 3 coordinates");
      for (std::size_t k = 0; k < p.size(); ++k) v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = p[k].get<double>();
    }
    const int arity = kind == CellKind::Triangle ? 3 : 4;
    Cells c(static_cast<Eigen::Index>(jc.size()), arity);
    for (std::size_t i = 0; i < jc.size(); ++i) {
      require(static_cast<int>(jc[i].size()) == arity, ErrorKind::ParseError, "cell arity mismatch");
      for (int k = 0; k < arity; ++k)
        c(static_cast<Eigen::Index>(i), k) = checked_index(jc[i][static_cast<std::size_t>(k)].get<long long>(), v.rows());
    }
    return Mesh(dim, kind, std::move(v), std::move(c));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("MSHJSON: ") + e.what());
  }
}

Mesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  const std::string text = read_file(path);
  switch (format) {
    case MeshFormat::OFF: return parse_off(text);
    case MeshFormat::OBJ: return parse_obj(text);
    case MeshFormat::MSHJSON: return parse_mshjson(text);
  }
  fail(ErrorKind::ParseError, "unknown mesh format");
}

Mesh load_mesh(const std::filesystem::path& path) {
  auto fmt = format_from_path(path);
  require(fmt.has_value(), ErrorKind::ParseError, "cannot infer mesh format from " + path.string());
  return load_mesh(path, *fmt);
}

std::string to_off(const Mesh& mesh) {
  require(mesh.cell_kind() == CellKind::Triangle, ErrorKind::UnsupportedCellKind, "OFF holds triangles only");
  std::ostringstream os;
  os.precision(17);
  os << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_cells() << " 0\n";
  for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i)
    os << mesh.vertices()(i, 0) << ' ' << mesh.vertices()(i, 1) << ' ' << mesh.vertices()(i, 2) << '\n';
  for (Eigen::Index c = 0; c < mesh.num_cells(); ++c)
    os << "3 " << mesh.cells()(c, 0) << ' ' << mesh.cells()(c, 1) << ' ' << mesh.cells()(c, 2) << '\n';
  return os.str();
}

std::string to_mshjson(const Mesh& mesh) {
  nlohmann::json j;
  j["dim"] = mesh.dim();
  j["cell_kind"] = mesh.cell_kind() == CellKind::Triangle ? "tri" : "tet";
  auto verts = nlohmann::json::array();
  for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i) {
    auto p = nlohmann::json::array();
    for (int k = 0; k < mesh.dim(); ++k) p.push_back(mesh.vertices()(i, k));
    verts.push_back(std::move(p));
  }
  auto cells = nlohmann::json::array();
  for (Eigen::Index c = 0; c < mesh.num_cells(); ++c) {
    auto t = nlohmann::json::array();
    for (Eigen::Index k = 0; k < mesh.cells().cols(); ++k) t.push_back(mesh.cells()(c, k));
    cells.push_back(std::move(t));
  }
  j["vertices"] = std::move(verts);
  j["cells"] = std::move(cells);
  return j.dump();
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path, MeshFormat format) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  switch (format) {
    case MeshFormat::OFF: out << to_off(mesh); break;
    case MeshFormat::MSHJSON: out << to_mshjson(mesh); break;
    case MeshFormat::OBJ: {
      require(mesh.cell_kind() == CellKind::Triangle, ErrorKind::UnsupportedCellKind, "OBJ holds triangles only");
      out.precision(17);
      for (Eigen::Index i = 0; i < mesh.num_vertices(); ++i)
        out << "v " << mesh.vertices()(i, 0) << ' ' << mesh.vertices()(i, 1) << ' ' << mesh.vertices()(i, 2) << '\n';
      for (Eigen::Index c = 0; c < mesh.num_cells(); ++c)
        out << "f " << mesh.cells()(c, 0) + 1 << ' ' << mesh.cells()(c, 1) + 1 << ' ' << mesh.cells()(c, 2) + 1 << '\n';
      break;
    }
  }
}

}  // namespace norm
