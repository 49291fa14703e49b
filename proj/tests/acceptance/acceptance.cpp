// Acceptance runs. `acceptance --criterion N` (or `--all`) prints one
// PASS/FAIL line per criterion and exits 1 if any failed.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "norm/data/generators.hpp"
#include "norm/log.hpp"
#include "norm/mesh/fem.hpp"
#include "norm/mesh/generators.hpp"
#include "norm/parallel.hpp"
#include "norm/verify.hpp"
#include "norm/workflow.hpp"

using namespace norm;
using Eigen::Index;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
  // Reported numbers (no timings); compared bitwise by the determinism run.
  std::vector<std::pair<std::string, double>> numbers;
  std::vector<std::string> details;
};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool g_full = false;

Outcome from_suite(const verify::SuiteResult& s, double time_limit) {
  Outcome o;
  o.pass = s.pass() && s.seconds <= time_limit;
  for (const auto& c : s.checks) {
    o.numbers.push_back({c.name, c.value});
    o.details.push_back(fmt("%-28s %s value %.4g limit %.4g %s", c.name.c_str(), c.pass ? "ok  " : "FAIL", c.value,
                            c.limit, c.detail.c_str()));
  }
  o.summary = fmt("%zu checks, worst value/limit %.3g, %.1f s (limit %.0f s)", s.checks.size(), s.worst_margin(),
                  s.seconds, time_limit);
  return o;
}

// ---- heat-semigroup setup shared by 5, 7 and 8 ----

struct HeatSetup {
  Mesh mesh;
  Dataset data;
  SpectralBasis lbo;
};

HeatSetup heat_setup(Index modes) {
  Mesh mesh = unit_square_grid(32);
  HeatOptions ho;
  ho.n = 500;
  ho.t = 0.05;
  ho.seed = 2024;
  Dataset data = make_heat_dataset(mesh, ho);
  SpectralBasis lbo = lbo_basis(cotangent_stiffness(mesh), lumped_mass(mesh), modes, mesh.content_hash());
  return {std::move(mesh), std::move(data), std::move(lbo)};
}

ModelOptions heat_model(Index modes) {
  ModelOptions m;
  m.modes = modes;
  m.width = 16;
  m.layers = 1;
  m.q_hidden = 0;
  m.seed = 1;
  return m;
}

TrainConfig heat_train(int epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 20;
  c.learning_rate = 5e-3;
  c.halve_every = epochs / 5;
  c.seed = 1;
  return c;
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  const auto h = heat_setup(64);
  const auto basis = std::make_shared<const SpectralBasis>(h.lbo);
  const auto r = fit(h.data, arch_for(h.data, heat_model(64), basis), heat_train(500));
  const double secs = since(t0);
  Outcome o;
  // Best operator of the form Phi diag(c) Phi^dagger with the exact heat
  // multipliers: what a perfectly trained spectral path can reach here.
  const Vector c = (-0.05 * basis->values().array()).exp();
  double floor = 0.0;
  for (auto i : h.data.test)
    floor += rel_l2(Matrix(basis->modes() * (c.asDiagonal() * (basis->pinv() * h.data.inputs[i]))), h.data.outputs[i]);
  floor /= static_cast<double>(h.data.test.size());
  o.details.push_back(fmt("diagonal heat multipliers through the d_m=64 encoder/decoder: rel_l2 %.4f%%", 100 * floor));
  o.pass = r.test.rel_l2 <= 0.01 && secs <= 600.0;
  o.numbers = {{"rel_l2", r.test.rel_l2}, {"mme", r.test.mme}, {"final_train_loss", r.trained.history.back().train_loss}};
  o.summary = fmt("heat test rel_l2 %.4f%% (limit 1%%), %.1f s (limit 600 s)", 100 * r.test.rel_l2, secs);
  return o;
}

Outcome criterion6() {
  const auto t0 = Clock::now();
  const Mesh mesh = notched_square(44);
  const SpectralBasis grf = lbo_basis(cotangent_stiffness(mesh), lumped_mass(mesh), 256, mesh.content_hash());
  DarcyOptions d;
  d.n = 1200;
  d.seed = 7;
  const Dataset data = make_darcy_dataset(mesh, grf, d, notch_boundary(mesh));
  const auto basis = std::make_shared<const SpectralBasis>(grf.truncated(128));
  ModelOptions m;  // d_m 128, d_v 32, 4 layers
  m.seed = 1;
  TrainConfig c;  // batch 100, halved every 100 epochs
  c.learning_rate = 3e-3;
  c.seed = 1;
  c.epochs = g_full ? 1000 : 50;
  const double limit = g_full ? 0.05 : 0.25, time_limit = g_full ? 7200.0 : 600.0;
  const auto r = fit(data, arch_for(data, m, basis), c, [&](const EpochRecord& e) {
    if (e.epoch % 10 == 0) log::info(fmt("epoch %d loss %.4f", e.epoch, e.train_loss));
  });
  const double secs = since(t0);
  Outcome o;
  o.pass = r.test.rel_l2 <= limit && secs <= time_limit;
  o.numbers = {{"rel_l2", r.test.rel_l2}, {"mme", r.test.mme}};
  o.summary = fmt("%s run on %lld nodes: test rel_l2 %.3f%% (limit %.0f%%), mme %.4g, %.1f s (limit %.0f s)",
                  g_full ? "full" : "50-epoch smoke", static_cast<long long>(mesh.num_vertices()),
                  100 * r.test.rel_l2, 100 * limit, r.test.mme, secs, time_limit);
  return o;
}

Outcome criterion7() {
  const auto h = heat_setup(128);
  const std::vector<double> grid{16, 32, 64, 128};
  const auto rows = run_sweep(SweepKind::Modes, grid, h.data, h.lbo, heat_model(128), heat_train(200), true);
  Outcome o;
  o.pass = true;
  std::map<BasisChoice, std::vector<double>> curves;
  for (const auto& r : rows) {
    curves[r.basis].push_back(r.rel_l2);
    o.numbers.push_back({fmt("%s_%g", to_string(r.basis), r.value), r.rel_l2});
  }
  std::string s;
  for (const auto& [b, c] : curves) {
    bool ok = c.size() == grid.size();
    for (std::size_t i = 1; i < c.size(); ++i) ok = ok && c[i] <= 1.10 * c[i - 1];
    o.pass = o.pass && ok;
    std::string line = std::string(to_string(b)) + " rel_l2:";
    for (std::size_t i = 0; i < c.size(); ++i) line += fmt(" d_m=%g %.4f%%", grid[i], 100 * c[i]);
    o.details.push_back(line + (ok ? "" : "  (increases beyond 10%)"));
    s += fmt("%s %s; ", to_string(b), ok ? "non-increasing" : "NOT non-increasing");
  }
  o.summary = s + "band 10%";
  return o;
}

Outcome criterion8() {
  const auto h = heat_setup(64);
  const Mesh fine = refine(h.mesh);
  const auto coarse_basis = std::make_shared<const SpectralBasis>(h.lbo);
  LboOptions lanczos;
  lanczos.solver = EigenSolverKind::Lanczos;
  const auto s = cotangent_stiffness(fine);
  const auto mm = lumped_mass(fine);
  const SpectralBasis fine_full = lbo_basis(s, mm, heat_full_modes(fine), fine.content_hash(), lanczos);
  const auto fine_basis = std::make_shared<const SpectralBasis>(fine_full.truncated(64));

  const auto opts = heat_model(64);
  const ArchSpec coarse_arch = arch_for(h.data, opts, coarse_basis);
  ArchSpec fine_arch = coarse_arch;
  fine_arch.basis_in = fine_arch.basis_out = fine_basis;
  fine_arch.domain_in = fine_arch.domain_out = fine_basis->domain_id();
  const auto pc_coarse = build_model(coarse_arch).param_count(), pc_fine = build_model(fine_arch).param_count();

  const auto r = fit(h.data, coarse_arch, heat_train(200));

  // Re-discretised test set: inputs interpolated onto the refined mesh,
  // targets from the heat semigroup there.
  Dataset fine_data;
  fine_data.input_domain_id = fine_data.output_domain_id = fine_basis->domain_id();
  for (auto i : h.data.test) {
    Matrix a = prolongate_to_refined(h.mesh, h.data.inputs[i]);
    fine_data.outputs.push_back(heat_semigroup_target(fine_full, Field(a, fine_basis->domain_id()), 0.05).values);
    fine_data.inputs.push_back(std::move(a));
    fine_data.test.push_back(fine_data.inputs.size() - 1);
  }
  const NormModel rebound = rebind(r.trained.model, fine_basis, fine_basis);
  const Metrics mf = evaluate(rebound, r.trained.input_norm, r.trained.output_norm, fine_data, fine_data.test);

  Outcome o;
  o.pass = pc_coarse == pc_fine && mf.rel_l2 <= 2.0 * r.test.rel_l2;
  o.numbers = {{"param_count_coarse", double(pc_coarse)}, {"param_count_fine", double(pc_fine)},
               {"rel_l2_coarse", r.test.rel_l2}, {"rel_l2_fine", mf.rel_l2}};
  o.summary = fmt("params %zu vs %zu; rel_l2 coarse (%lld nodes) %.4f%%, refined (%lld nodes) %.4f%% (limit 2x)",
                  pc_coarse, pc_fine, static_cast<long long>(h.mesh.num_vertices()), 100 * r.test.rel_l2,
                  static_cast<long long>(fine.num_vertices()), 100 * mf.rel_l2);
  return o;
}

Outcome run_criterion(int c) {
  switch (c) {
    case 1: return from_suite(verify::spectrum(), 60.0);
    case 2: return from_suite(verify::bound(), 30.0);
    case 3: return from_suite(verify::tensor_oracle(), 5.0);
    case 4: return from_suite(verify::gradcheck(), 30.0);
    case 5: return criterion5();
    case 6: return criterion6();
    case 7: return criterion7();
    case 8: return criterion8();
    case 10: return from_suite(verify::fem(), 30.0);
  }
  return {};
}

// ---- determinism ----

std::string exe_stamp() {
  std::error_code ec;
  const auto p = fs::read_symlink("/proc/self/exe", ec);
  if (ec) return "unknown";
  const auto t = fs::last_write_time(p, ec).time_since_epoch().count();
  return std::to_string(fs::file_size(p, ec)) + ":" + std::to_string(t) + (g_full ? ":full" : ":smoke");
}

fs::path results_dir() { return fs::current_path() / "acceptance_results"; }

void store(int c, const Outcome& o) {
  fs::create_directories(results_dir());
  std::ofstream f(results_dir() / ("criterion_" + std::to_string(c) + ".txt"));
  f << exe_stamp() << '\n';
  for (const auto& [k, v] : o.numbers) f << k << ' ' << fmt("%a", v) << '\n';
}

bool load(int c, std::vector<std::pair<std::string, double>>& out) {
  std::ifstream f(results_dir() / ("criterion_" + std::to_string(c) + ".txt"));
  std::string stamp;
  if (!std::getline(f, stamp) || stamp != exe_stamp()) return false;
  // Names may contain spaces; the value is the last field.
  std::string line;
  while (std::getline(f, line)) {
    const auto sp = line.rfind(' ');
    if (sp == std::string::npos) return false;
    out.push_back({line.substr(0, sp), std::strtod(line.c_str() + sp + 1, nullptr)});
  }
  return true;
}

Outcome criterion9() {
  Outcome o;
  o.pass = true;
  int reused = 0;
  for (int c = 1; c <= 8; ++c) {
    std::vector<std::pair<std::string, double>> first;
    if (load(c, first)) {
      ++reused;
    } else {
      first = run_criterion(c).numbers;
    }
    const auto second = run_criterion(c).numbers;
    bool same = first.size() == second.size() && !first.empty();
    for (std::size_t i = 0; same && i < first.size(); ++i)
      same = first[i].first == second[i].first &&
             std::memcmp(&first[i].second, &second[i].second, sizeof(double)) == 0;
    o.pass = o.pass && same;
    o.details.push_back(fmt("criterion %d: %zu numbers %s", c, second.size(), same ? "bitwise identical" : "DIFFER"));
    for (std::size_t i = 0; !same && i < std::min(first.size(), second.size()); ++i)
      o.details.push_back(fmt("  %s %.17g vs %.17g", first[i].first.c_str(), first[i].second, second[i].second));
  }
  o.summary = fmt("criteria 1-8 rerun at 1 thread (%d compared against stored results)", reused);
  return o;
}

int usage() {
  std::cerr << "usage: acceptance (--criterion N | --all) [--full] [--verbose]\n"
               "  --full   run criterion 6 at 1000 epochs instead of the 50-epoch smoke variant\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  bool verbose = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      const int c = std::atoi(argv[++i]);
      if (c < 1 || c > 10) return usage();
      which.push_back(c);
    } else if (a == "--all") {
      for (int c = 1; c <= 10; ++c) which.push_back(c);
    } else if (a == "--full") {
      g_full = true;
    } else if (a == "--verbose") {
      verbose = true;
    } else {
      return usage();
    }
  }
  if (which.empty()) return usage();
  if (std::getenv("NORM_ACCEPT_FULL")) g_full = true;
  set_thread_count(1);
  log::set_level(verbose ? log::Level::Info : log::Level::Warn);

  bool all_pass = true;
  for (int c : which) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c == 9 ? criterion9() : run_criterion(c);
      if (c != 9) store(c, o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("error: ") + e.what();
    }
    for (const auto& d : o.details) std::cout << "    " << d << '\n';
    std::cout << "criterion " << c << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.summary
              << fmt("  [%.1f s]", since(t0)) << std::endl;
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
