#include <fstream>
#include <json.hpp>
#include <sstream>

#include "norm/binio.hpp"
#include "norm/error.hpp"
#include "norm/op/model.hpp"

namespace norm {

namespace {

constexpr std::string_view kMagic{"NORMCK1\0", 8};
constexpr int kFormatVersion = 1;
using nlohmann::json;

std::string read_text(const std::filesystem::path& p) {
  std::ifstream is(p);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open " + p.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json read_model_json(const std::filesystem::path& dir) {
  try {
    return json::parse(read_text(dir / "model.json"));
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, "model.json: " + std::string(e.what()));
  }
}

}  // namespace

void save_checkpoint(const NormModel& model, const std::filesystem::path& dir, const std::string& extra_json) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  const auto& s = model.spec;
  json j;
  j["format_version"] = kFormatVersion;
  j["wiring"] = to_string(s.wiring);
  j["d_a"] = s.d_a;
  j["d_u"] = s.d_u;
  j["d_v"] = s.d_v;
  j["layers"] = s.layers;
  j["activation"] = to_string(s.activation);
  j["p_hidden"] = s.p_hidden;
  j["q_hidden"] = s.q_hidden;
  j["transition"] = s.transition;
  j["n_t"] = s.n_t;
  j["d_t"] = s.d_t;
  j["seed"] = s.seed;
  j["input_domain_id"] = model.input_domain_id;
  j["output_domain_id"] = model.output_domain_id;
  json bases = json::object();
  if (s.basis_in) {
    save_basis(*s.basis_in, dir / "basis_in.nsb");
    bases["in"] = {{"file", "basis_in.nsb"}, {"kind", to_string(s.basis_in->kind())},
                   {"d_m", s.basis_in->size()}, {"source_id", s.basis_in->domain_id()}};
  }
  if (s.basis_out && s.basis_out != s.basis_in) {
    save_basis(*s.basis_out, dir / "basis_out.nsb");
    bases["out"] = {{"file", "basis_out.nsb"}, {"kind", to_string(s.basis_out->kind())},
                    {"d_m", s.basis_out->size()}, {"source_id", s.basis_out->domain_id()}};
  }
  j["bases"] = bases;
  json layers = json::array();
  for (const auto& l : model.layers)
    layers.push_back({{"kind", to_string(l.kind)}, {"activation", to_string(l.activation)}});
  j["layer_kinds"] = layers;
  json shapes = json::array();
  for (const auto& slot : model.slots) shapes.push_back({{"name", slot.name}, {"shape", {slot.rows, slot.cols}}});
  j["params"] = shapes;
  j["param_count"] = model.param_count();
  try {
    j["extra"] = json::parse(extra_json);
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, "checkpoint extra: " + std::string(e.what()));
  }
  {
    std::ofstream os(dir / "model.json");
    require(static_cast<bool>(os), ErrorKind::Io, "cannot write model.json");
    os << j.dump(2) << "\n";
  }
  std::ofstream os(dir / "params.bin", std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot write params.bin");
  binio::write_magic(os, kMagic);
  binio::write_le<std::uint64_t>(os, model.param_count());
  binio::write_f64(os, model.theta);
  require(static_cast<bool>(os), ErrorKind::Io, "write failed for params.bin");
}

NormModel load_checkpoint(const std::filesystem::path& dir) {
  const json j = read_model_json(dir);
  try {
    require(j.at("format_version").get<int>() == kFormatVersion, ErrorKind::FormatVersion,
            "unsupported checkpoint version");
    ArchSpec s;
    s.wiring = parse_wiring(j.at("wiring").get<std::string>());
    s.d_a = j.at("d_a").get<Eigen::Index>();
    s.d_u = j.at("d_u").get<Eigen::Index>();
    s.d_v = j.at("d_v").get<Eigen::Index>();
    s.layers = j.at("layers").get<int>();
    s.activation = parse_activation(j.at("activation").get<std::string>());
    s.p_hidden = j.at("p_hidden").get<Eigen::Index>();
    s.q_hidden = j.at("q_hidden").get<Eigen::Index>();
    s.transition = j.at("transition").get<int>();
    s.n_t = j.at("n_t").get<Eigen::Index>();
    s.d_t = j.at("d_t").get<Eigen::Index>();
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto& bases = j.at("bases");
    if (bases.contains("in"))
      s.basis_in = std::make_shared<const SpectralBasis>(load_basis(dir / bases["in"].at("file").get<std::string>()));
    if (bases.contains("out"))
      s.basis_out = std::make_shared<const SpectralBasis>(load_basis(dir / bases["out"].at("file").get<std::string>()));
    else
      s.basis_out = s.basis_in;
    s.domain_in = j.at("input_domain_id").get<std::string>();
    s.domain_out = j.at("output_domain_id").get<std::string>();
    NormModel m = build_model(s);

    const auto& shapes = j.at("params");
    require(shapes.size() == m.slots.size(), ErrorKind::ParseError, "parameter list does not match the architecture");
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      const auto& e = shapes[i];
      require(e.at("name").get<std::string>() == m.slots[i].name &&
                  e.at("shape")[0].get<Eigen::Index>() == m.slots[i].rows &&
                  e.at("shape")[1].get<Eigen::Index>() == m.slots[i].cols,
              ErrorKind::ParseError, "parameter " + m.slots[i].name + " has an unexpected shape");
    }

    std::ifstream is(dir / "params.bin", std::ios::binary);
    require(static_cast<bool>(is), ErrorKind::Io, "cannot open params.bin");
    binio::read_magic(is, kMagic, "params.bin");
    const auto count = binio::read_le<std::uint64_t>(is);
    require(count == m.param_count(), ErrorKind::ParseError, "params.bin holds " + std::to_string(count) +
                                                                 " values, architecture needs " +
                                                                 std::to_string(m.param_count()));
    binio::read_f64(is, m.theta);
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, "model.json: " + std::string(e.what()));
  }
}

std::string checkpoint_extra(const std::filesystem::path& dir) {
  const json j = read_model_json(dir);
  return j.contains("extra") ? j["extra"].dump() : "{}";
}

}  // namespace norm
