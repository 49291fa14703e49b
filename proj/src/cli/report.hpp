#pragma once

#include <filesystem>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace norm::cli {

using json = nlohmann::ordered_json;

// Bad flag combinations found after parsing; exit code 2 like parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Report {
  std::string command;
  bool ok = true;
  std::vector<std::string> outputs;
  json metrics = json::object();
  std::vector<std::string> lines;  // human-readable body

  void output(const std::filesystem::path& p) { outputs.push_back(p.string()); }
  void line(std::string s) { lines.push_back(std::move(s)); }
};

// Writes text to path, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace norm::cli
