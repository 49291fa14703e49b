#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "norm/cli/cli.hpp"
#include "norm/data/dataset.hpp"
#include "norm/mesh/io.hpp"
#include "norm/op/model.hpp"
#include "norm/spectral/basis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "norm");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return norm::cli::run(static_cast<int>(argv.size()), argv.data());
}

// Runs in-process and returns (exit code, stdout).
std::pair<int, std::string> run_captured(std::vector<std::string> args) {
  testing::internal::CaptureStdout();
  testing::internal::CaptureStderr();
  const int code = run(std::move(args));
  std::string out = testing::internal::GetCapturedStdout();
  testing::internal::GetCapturedStderr();
  return {code, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class CliWorkflow : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "norm_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static std::string p(const std::string& name) { return (dir_ / name).string(); }
  static fs::path dir_;
};
fs::path CliWorkflow::dir_;

}  // namespace

TEST_F(CliWorkflow, EndToEnd) {
  ASSERT_EQ(run_captured({"mesh", "grid", "--n", "6", "--out", p("grid.json")}).first, 0);
  const auto mesh = norm::load_mesh(p("grid.json"));
  EXPECT_EQ(mesh.num_vertices(), 49);

  auto [code, out] = run_captured({"--json", "mesh", "info", "--mesh", p("grid.json")});
  ASSERT_EQ(code, 0);
  const auto info = json::parse(out);
  EXPECT_EQ(info["status"], "ok");
  EXPECT_EQ(info["command"], "mesh info");

  ASSERT_EQ(run_captured({"lbo", "compute", "--mesh", p("grid.json"), "--modes", "12", "--out", p("b.nsb")}).first, 0);
  EXPECT_EQ(norm::load_basis(p("b.nsb")).size(), 12);

  ASSERT_EQ(run_captured({"data", "gen", "heat", "--mesh", p("grid.json"), "--n", "24", "--seed", "3", "--out",
                          p("heat.nds")})
                .first,
            0);
  ASSERT_EQ(run_captured({"data", "gen", "heat", "--mesh", p("grid.json"), "--n", "24", "--seed", "3", "--out",
                          p("heat2.nds")})
                .first,
            0);
  EXPECT_EQ(slurp(p("heat.nds")), slurp(p("heat2.nds")));
  EXPECT_EQ(norm::load_dataset(p("heat.nds")).test.size(), 4u);

  const std::vector<std::string> small{"--width", "4", "--layers", "2", "--q-hidden", "8", "--epochs", "3",
                                       "--batch", "5"};
  std::vector<std::string> train{"-q", "train", "--data", p("heat.nds"), "--basis-in", p("b.nsb"), "--out",
                                 p("ckpt")};
  train.insert(train.end(), small.begin(), small.end());
  ASSERT_EQ(run_captured(train).first, 0);
  EXPECT_TRUE(fs::exists(p("ckpt/model.json")));
  EXPECT_TRUE(fs::exists(p("ckpt/params.bin")));
  const std::string params = slurp(p("ckpt/params.bin"));
  ASSERT_EQ(run_captured(train).first, 0);
  EXPECT_EQ(slurp(p("ckpt/params.bin")), params);

  ASSERT_EQ(run_captured({"eval", "--ckpt", p("ckpt"), "--data", p("heat.nds"), "--report", p("metrics.json")}).first,
            0);
  const auto metrics = json::parse(slurp(p("metrics.json")));
  EXPECT_GT(metrics["rel_l2"].get<double>(), 0.0);
  EXPECT_EQ(metrics["per_sample"]["index"].size(), 4u);

  std::vector<std::string> sweep{"-q", "sweep", "--kind", "modes", "--grid", "4,8", "--data", p("heat.nds"),
                                 "--basis-in", p("b.nsb"), "--out", p("sweep.csv")};
  sweep.insert(sweep.end(), small.begin(), small.end());
  ASSERT_EQ(run_captured(sweep).first, 0);
  std::istringstream csv(slurp(p("sweep.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("value,rel_l2,mme", 0), 0u) << line;
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 2);

  ASSERT_EQ(run_captured({"export-vtk", "--mesh", p("grid.json"), "--field", p("heat.nds"), "--sample", "1",
                          "--out", p("f.vtk")})
                .first,
            0);
  const std::string vtk = slurp(p("f.vtk"));
  EXPECT_NE(vtk.find("POINTS 49 double"), std::string::npos);
  EXPECT_NE(vtk.find("CELL_TYPES 72"), std::string::npos);

  auto [gc, gout] = run_captured({"--json", "gradcheck", "--ckpt", p("ckpt"), "--data", p("heat.nds"), "--params",
                                  "10"});
  EXPECT_EQ(gc, 0) << gout;
  EXPECT_LE(json::parse(gout)["metrics"]["max_rel_error"].get<double>(), 1e-5);
}

TEST_F(CliWorkflow, UsageErrors) {
  EXPECT_EQ(run_captured({"mesh", "grid", "--n", "3", "--out", p("x.unknown")}).first, 2);
  EXPECT_EQ(run_captured({"sweep", "--grid", "a,b", "--data", p("none.nds"), "--basis-in", p("b.nsb")}).first, 2);
  EXPECT_EQ(run_captured({"--simd", "mmx", "verify", "--suite", "tensor-oracle"}).first, 2);
  EXPECT_EQ(run_captured({"train", "--out", p("c")}).first, 2);
}

TEST_F(CliWorkflow, RuntimeFailures) {
  EXPECT_EQ(run_captured({"data", "gen", "heat", "--mesh", p("missing.json"), "--out", p("h.nds")}).first, 1);
  ASSERT_EQ(run_captured({"mesh", "grid", "--n", "2", "--out", p("g2.json")}).first, 0);
  {
    std::ofstream f(p("field.csv"));
    f << "value\n1\n2\n3\n";
  }
  // 3 rows against a 9-vertex mesh.
  EXPECT_EQ(run_captured({"export-vtk", "--mesh", p("g2.json"), "--field", p("field.csv"), "--out", p("o.vtk")}).first,
            1);
  {
    std::ofstream f(p("field.csv"));
    f << "# comment\nu,v\n";
    for (int i = 0; i < 9; ++i) f << i << "," << -i << "\n";
  }
  EXPECT_EQ(run_captured({"export-vtk", "--mesh", p("g2.json"), "--field", p("field.csv"), "--out", p("o.vtk")}).first,
            0);
  EXPECT_NE(slurp(p("o.vtk")).find("VECTORS"), std::string::npos);
}

TEST(CliProcess, JsonReportOnFailure) {
  const std::string cmd = std::string(NORM_EXE) + " --json mesh info --mesh /nonexistent/m.json 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string out;
  char buf[256];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  EXPECT_EQ(WEXITSTATUS(status), 1);
  const auto j = json::parse(out);
  EXPECT_EQ(j["status"], "failed");
  EXPECT_TRUE(j.contains("error"));
}

TEST(CliProcess, ThreadsFromEnvironment) {
  const std::string cmd = "NORM_THREADS=2 " + std::string(NORM_EXE) + " -q verify --suite tensor-oracle";
  EXPECT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
  // Unusable values fall back to one thread.
  const std::string bad = "NORM_THREADS=zero " + std::string(NORM_EXE) + " -q verify --suite tensor-oracle 2>/dev/null";
  EXPECT_EQ(WEXITSTATUS(std::system(bad.c_str())), 0);
}
