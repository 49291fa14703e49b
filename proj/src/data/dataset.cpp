#include "norm/data/dataset.hpp"

#include <fstream>
#include <json.hpp>

#include "norm/binio.hpp"
#include "norm/error.hpp"

namespace norm {

namespace {
constexpr std::string_view kMagic{"NORMDS1\0", 8};
using nlohmann::json;
}  // namespace

void Dataset::validate() const {
  require(inputs.size() == outputs.size(), ErrorKind::ShapeMismatch, "input and output counts differ");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    require(inputs[i].rows() == inputs[0].rows() && inputs[i].cols() == inputs[0].cols() &&
                outputs[i].rows() == outputs[0].rows() && outputs[i].cols() == outputs[0].cols(),
            ErrorKind::ShapeMismatch, "sample " + std::to_string(i) + " has a different shape");
    require(inputs[i].allFinite() && outputs[i].allFinite(), ErrorKind::ShapeMismatch,
            "sample " + std::to_string(i) + " has non-finite values");
  }
  std::vector<char> seen(inputs.size(), 0);
  for (const auto* list : {&train, &test})
    for (auto i : *list) {
      require(i < inputs.size(), ErrorKind::IndexOutOfRange, "split index " + std::to_string(i) + " out of range");
      require(!seen[i], ErrorKind::ShapeMismatch, "split index " + std::to_string(i) + " listed twice");
      seen[i] = 1;
    }
}

void split_five_to_one(Dataset& ds) {
  const std::size_t n = ds.size();
  const std::size_t n_test = n / 6;
  ds.train.clear();
  ds.test.clear();
  for (std::size_t i = 0; i < n - n_test; ++i) ds.train.push_back(i);
  for (std::size_t i = n - n_test; i < n; ++i) ds.test.push_back(i);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  require(!ds.inputs.empty(), ErrorKind::EmptyBatch, "dataset is empty");
  json h;
  h["format"] = "nds";
  h["version"] = 1;
  h["n_samples"] = ds.size();
  h["input"] = {{"nodes", ds.inputs[0].rows()}, {"channels", ds.inputs[0].cols()}, {"domain_id", ds.input_domain_id}};
  h["output"] = {
      {"nodes", ds.outputs[0].rows()}, {"channels", ds.outputs[0].cols()}, {"domain_id", ds.output_domain_id}};
  h["layout"] = ds.layout;
  h["n_t"] = ds.n_t;
  h["split"] = {{"train", ds.train}, {"test", ds.test}};
  h["provenance"] = json::parse(ds.provenance);
  const std::string text = h.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  binio::write_magic(os, kMagic);
  binio::write_le<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& m : ds.inputs) binio::write_f64(os, {m.data(), static_cast<std::size_t>(m.size())});
  for (const auto& m : ds.outputs) binio::write_f64(os, {m.data(), static_cast<std::size_t>(m.size())});
  require(static_cast<bool>(os), ErrorKind::Io, "write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open " + path.string());
  binio::read_magic(is, kMagic, path.string());
  const auto len = binio::read_le<std::uint64_t>(is);
  require(len < (1ull << 31), ErrorKind::ParseError, "implausible header length");
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  require(static_cast<bool>(is), ErrorKind::ParseError, "truncated header");
  Dataset ds;
  Eigen::Index n = 0, ni = 0, ci = 0, no = 0, co = 0;
  try {
    const json h = json::parse(text);
    require(h.at("version").get<int>() == 1, ErrorKind::FormatVersion, "unsupported dataset version");
    n = h.at("n_samples").get<Eigen::Index>();
    ni = h.at("input").at("nodes").get<Eigen::Index>();
    ci = h.at("input").at("channels").get<Eigen::Index>();
    no = h.at("output").at("nodes").get<Eigen::Index>();
    co = h.at("output").at("channels").get<Eigen::Index>();
    ds.input_domain_id = h.at("input").at("domain_id").get<std::string>();
    ds.output_domain_id = h.at("output").at("domain_id").get<std::string>();
    ds.layout = h.at("layout").get<std::string>();
    ds.n_t = h.value("n_t", Eigen::Index{0});
    ds.train = h.at("split").at("train").get<std::vector<std::size_t>>();
    ds.test = h.at("split").at("test").get<std::vector<std::size_t>>();
    ds.provenance = h.at("provenance").dump();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, "dataset header: " + std::string(e.what()));
  }
  require(n >= 1 && ni >= 1 && ci >= 1 && no >= 1 && co >= 1, ErrorKind::ParseError, "bad dataset shape");
  ds.inputs.assign(static_cast<std::size_t>(n), Matrix(ni, ci));
  ds.outputs.assign(static_cast<std::size_t>(n), Matrix(no, co));
  for (auto& m : ds.inputs) binio::read_f64(is, {m.data(), static_cast<std::size_t>(m.size())});
  for (auto& m : ds.outputs) binio::read_f64(is, {m.data(), static_cast<std::size_t>(m.size())});
  ds.validate();
  return ds;
}

}  // namespace norm
