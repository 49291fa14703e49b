#include "norm/cli/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "norm/data/generators.hpp"
#include "norm/error.hpp"
#include "norm/kernels/kernels.hpp"
#include "norm/log.hpp"
#include "norm/mesh/fem.hpp"
#include "norm/mesh/generators.hpp"
#include "norm/mesh/io.hpp"
#include "norm/parallel.hpp"
#include "norm/verify.hpp"
#include "norm/workflow.hpp"
#include "report.hpp"

namespace norm::cli {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  require(static_cast<bool>(out), ErrorKind::Io, "write to " + path.string() + " failed");
}

namespace {

struct Globals {
  int threads = 0;
  bool json = false;
  bool quiet = false;
  bool verbose = false;
  std::string simd;
};

// ---- shared option groups ----

struct ModelArgs {
  Eigen::Index modes = 0;  // 0: whole basis (LBO) or 128 (POD)
  Eigen::Index width = 32;
  int layers = 4;
  std::string activation = "gelu";
  Eigen::Index p_hidden = 0;
  Eigen::Index q_hidden = 128;
  std::string basis = "lbo";
  std::uint64_t seed = 0;
};

struct TrainArgs {
  TrainConfig cfg;
  std::string schedule = "step";
  std::string normalization = "global";
};

void add_model_options(CLI::App* c, ModelArgs& m) {
  c->add_option("--modes", m.modes, "Spectral modes d_m (default: all modes of the basis, 128 for POD)");
  c->add_option("--width", m.width, "Channel width d_v")->check(CLI::PositiveNumber);
  c->add_option("--layers", m.layers, "Number of L-layers")->check(CLI::PositiveNumber);
  c->add_option("--activation", m.activation, "gelu, relu or identity")
      ->check(CLI::IsMember({"gelu", "relu", "identity"}));
  c->add_option("--p-hidden", m.p_hidden, "Hidden width of the lifting (0: affine)")->check(CLI::NonNegativeNumber);
  c->add_option("--q-hidden", m.q_hidden, "Hidden width of the projection (0: affine)")->check(CLI::NonNegativeNumber);
  c->add_option("--basis", m.basis, "lbo or pod")->check(CLI::IsMember({"lbo", "pod"}));
}

void add_train_options(CLI::App* c, TrainArgs& t, std::uint64_t& seed) {
  c->add_option("--epochs", t.cfg.epochs, "Training epochs")->check(CLI::PositiveNumber);
  c->add_option("--batch", t.cfg.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  c->add_option("--lr", t.cfg.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
  c->add_option("--schedule", t.schedule, "step (halve every --halve-every epochs) or constant")
      ->check(CLI::IsMember({"step", "constant"}));
  c->add_option("--halve-every", t.cfg.halve_every, "Epochs between learning-rate halvings")
      ->check(CLI::PositiveNumber);
  c->add_option("--normalization", t.normalization, "global (per channel) or none")
      ->check(CLI::IsMember({"global", "none"}));
  c->add_option("--weight-decay", t.cfg.weight_decay, "L2 penalty added to the gradient")
      ->check(CLI::NonNegativeNumber);
  c->add_option("--eval-every", t.cfg.eval_every, "Test evaluation period in epochs (0: last epoch only)")
      ->check(CLI::NonNegativeNumber);
  c->add_option("--micro-batch", t.cfg.micro_batch, "Samples per forward/backward pass")->check(CLI::PositiveNumber);
  c->add_option("--seed", seed, "Seed for initialisation and shuffling");
}

TrainConfig train_config(const TrainArgs& t, std::uint64_t seed) {
  TrainConfig cfg = t.cfg;
  cfg.seed = seed;
  cfg.schedule = t.schedule == "step" ? LrSchedule::StepHalving : LrSchedule::Constant;
  cfg.normalization = t.normalization == "global" ? Normalization::GlobalPerChannel : Normalization::None;
  return cfg;
}

ModelOptions model_options(const ModelArgs& m, Eigen::Index modes) {
  ModelOptions o;
  o.modes = modes;
  o.width = m.width;
  o.layers = m.layers;
  o.activation = parse_activation(m.activation);
  o.p_hidden = m.p_hidden;
  o.q_hidden = m.q_hidden;
  o.seed = m.seed;
  return o;
}

BasisPtr load_truncated(const std::filesystem::path& path, Eigen::Index modes) {
  SpectralBasis b = load_basis(path);
  if (modes <= 0 || modes == b.size()) return std::make_shared<const SpectralBasis>(std::move(b));
  require(modes < b.size(), ErrorKind::InvalidModeCount,
          path.string() + " holds " + std::to_string(b.size()) + " modes, " + std::to_string(modes) + " requested");
  return std::make_shared<const SpectralBasis>(b.truncated(modes));
}

MeshFormat mesh_format(const std::filesystem::path& p) {
  auto f = format_from_path(p);
  if (!f) throw UsageError("cannot infer mesh format of '" + p.string() + "' (use .off, .obj or .json)");
  return *f;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

json mesh_summary(const Mesh& mesh) {
  return json{{"dim", mesh.dim()},
              {"cell_kind", mesh.cell_kind() == CellKind::Triangle ? "tri" : "tet"},
              {"vertices", mesh.num_vertices()},
              {"cells", mesh.num_cells()},
              {"boundary_vertices", mesh.boundary_vertices().size()},
              {"measure", mesh.total_measure()},
              {"domain_id", mesh.domain_id()}};
}

void describe_mesh(const Mesh& mesh, Report& r) {
  r.metrics = mesh_summary(mesh);
  r.line(std::to_string(mesh.num_vertices()) + " vertices, " + std::to_string(mesh.num_cells()) + " " +
         (mesh.cell_kind() == CellKind::Triangle ? "triangles" : "tetrahedra") + ", " +
         std::to_string(mesh.boundary_vertices().size()) + " boundary vertices");
  r.line("measure " + fmt(mesh.total_measure()) + ", id " + mesh.domain_id().substr(0, 16));
}

// ---- mesh ----

struct MeshGenArgs {
  int n = 16;
  std::string out;
};

void cmd_mesh_gen(const MeshGenArgs& a, bool notch, Report& r) {
  const Mesh mesh = notch ? notched_square(a.n) : unit_square_grid(a.n);
  describe_mesh(mesh, r);
  if (!a.out.empty()) {
    const auto format = mesh_format(a.out);
    if (std::filesystem::path(a.out).has_parent_path())
      std::filesystem::create_directories(std::filesystem::path(a.out).parent_path());
    save_mesh(mesh, a.out, format);
    r.output(a.out);
  }
}

void cmd_mesh_info(const std::string& path, Report& r) { describe_mesh(load_mesh(path), r); }

// ---- lbo ----

struct LboArgs {
  std::string mesh, out, solver = "auto";
  Eigen::Index modes = 128;
};

void cmd_lbo(const LboArgs& a, Report& r) {
  const Mesh mesh = load_mesh(a.mesh);
  LboOptions opts;
  opts.solver = a.solver == "dense" ? EigenSolverKind::Dense
                : a.solver == "lanczos" ? EigenSolverKind::Lanczos
                                        : EigenSolverKind::Auto;
  const SpectralBasis b = lbo_basis(cotangent_stiffness(mesh), lumped_mass(mesh), a.modes, mesh.content_hash(), opts);
  save_basis(b, a.out);
  r.output(a.out);
  std::vector<double> head(b.values().data(), b.values().data() + std::min<Eigen::Index>(b.size(), 10));
  r.metrics = {{"modes", b.size()},
               {"nodes", b.nodes()},
               {"eigenvalues_head", head},
               {"eigenvalue_max", b.values()(b.size() - 1)},
               {"domain_id", b.domain_id()}};
  std::string s = "eigenvalues:";
  for (double v : head) s += " " + fmt(v);
  r.line(std::to_string(b.size()) + " modes on " + std::to_string(b.nodes()) + " nodes");
  r.line(s + (b.size() > 10 ? " ..." : ""));
}

// ---- data gen ----

struct DataArgs {
  std::string mesh, out;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double t = 0.05;
  double source = 1.0;
  Eigen::Index grf_modes = 256;
  double shift = 25.0;
  double power = 0.0;  // 0: generator default
};

void summarize_dataset(const Dataset& ds, Report& r) {
  r.metrics = {{"samples", ds.size()},
               {"train", ds.train.size()},
               {"test", ds.test.size()},
               {"input_shape", {ds.inputs.front().rows(), ds.inputs.front().cols()}},
               {"output_shape", {ds.outputs.front().rows(), ds.outputs.front().cols()}},
               {"provenance", json::parse(ds.provenance)}};
  r.line(std::to_string(ds.size()) + " samples (" + std::to_string(ds.train.size()) + " train, " +
         std::to_string(ds.test.size()) + " test) on " + std::to_string(ds.inputs.front().rows()) + " nodes");
}

void cmd_data_darcy(const DataArgs& a, Report& r) {
  const Mesh mesh = load_mesh(a.mesh);
  DarcyOptions opts;
  opts.n = a.n;
  opts.seed = a.seed;
  opts.source = a.source;
  opts.grf.shift = a.shift;
  if (a.power > 0.0) opts.grf.power = a.power;
  const Eigen::Index dm = std::min(a.grf_modes, mesh.num_vertices());
  const SpectralBasis grf = lbo_basis(cotangent_stiffness(mesh), lumped_mass(mesh), dm, mesh.content_hash());
  const Dataset ds = make_darcy_dataset(mesh, grf, opts, notch_boundary(mesh));
  save_dataset(ds, a.out);
  r.output(a.out);
  summarize_dataset(ds, r);
}

void cmd_data_heat(const DataArgs& a, Report& r) {
  const Mesh mesh = load_mesh(a.mesh);
  HeatOptions opts;
  opts.n = a.n;
  opts.t = a.t;
  opts.seed = a.seed;
  opts.grf.shift = a.shift;
  if (a.power > 0.0) opts.grf.power = a.power;
  const Dataset ds = make_heat_dataset(mesh, opts);
  save_dataset(ds, a.out);
  r.output(a.out);
  summarize_dataset(ds, r);
}

// ---- train / eval ----

struct TrainCmdArgs {
  std::string data, basis_in, basis_out, out;
  ModelArgs model;
  TrainArgs train;
};

struct Bases {
  BasisPtr in, out;
  Eigen::Index modes;
};

Bases resolve_bases(const Dataset& ds, const ModelArgs& m, const std::string& basis_in, const std::string& basis_out) {
  Bases b;
  if (m.basis == "pod") {
    if (!basis_in.empty() || !basis_out.empty()) throw UsageError("--basis pod builds its basis from the data; drop --basis-in/--basis-out");
    b.modes = m.modes > 0 ? m.modes : 128;
    b.in = b.out = pod_for(ds, ds.train, b.modes);
    return b;
  }
  if (basis_in.empty()) throw UsageError("--basis-in is required for --basis lbo");
  b.in = load_truncated(basis_in, m.modes);
  b.out = basis_out.empty() ? b.in : load_truncated(basis_out, b.in->size());
  b.modes = b.in->size();
  return b;
}

void cmd_train(const TrainCmdArgs& a, const Globals& g, Report& r) {
  const Dataset ds = load_dataset(a.data);
  const Bases b = resolve_bases(ds, a.model, a.basis_in, a.basis_out);
  const ArchSpec arch = arch_for(ds, model_options(a.model, b.modes), b.in, b.out);
  const TrainConfig cfg = train_config(a.train, a.model.seed);
  const bool progress = !g.quiet && !g.json;
  const int every = std::max(1, cfg.epochs / 20);
  const FitResult f = fit(ds, arch, cfg, [&](const EpochRecord& e) {
    if (progress && (e.epoch % every == 0 || e.epoch == cfg.epochs || !std::isnan(e.test_rel_l2)))
      std::cerr << "epoch " << e.epoch << "/" << cfg.epochs << "  loss " << fmt(e.train_loss)
                << (std::isnan(e.test_rel_l2) ? std::string() : "  test rel_l2 " + fmt(e.test_rel_l2)) << "  "
                << fmt(e.seconds) << " s\n";
  });

  const BasisChoice choice = parse_basis_choice(a.model.basis);
  json extra;
  extra["input_norm"] = json::parse(f.trained.input_norm.to_json());
  extra["output_norm"] = json::parse(f.trained.output_norm.to_json());
  extra["config"] = json::parse(config_json(arch, cfg, choice));
  auto hist = json::array();
  for (const auto& e : f.trained.history)
    hist.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"test_rel_l2", e.test_rel_l2}});
  extra["history"] = std::move(hist);
  save_checkpoint(f.trained.model, a.out, extra.dump());
  r.output(a.out);

  r.metrics = {{"params", f.trained.model.param_count()},
               {"final_train_loss", f.trained.history.back().train_loss},
               {"test_rel_l2", f.test.rel_l2},
               {"test_mme", f.test.mme},
               {"train_seconds", f.seconds}};
  r.line(std::to_string(f.trained.model.param_count()) + " parameters, " + std::to_string(cfg.epochs) + " epochs in " +
         fmt(f.seconds) + " s");
  r.line("final train loss " + fmt(f.trained.history.back().train_loss));
  r.line("test rel_l2 " + fmt(f.test.rel_l2) + ", mme " + fmt(f.test.mme));
}

struct Loaded {
  NormModel model;
  Normalizer in, out;
  json extra;
};

Loaded load_trained(const std::string& dir) {
  Loaded l{load_checkpoint(dir), {}, {}, json::parse(checkpoint_extra(dir))};
  if (l.extra.contains("input_norm")) l.in = Normalizer::from_json(l.extra["input_norm"].dump());
  if (l.extra.contains("output_norm")) l.out = Normalizer::from_json(l.extra["output_norm"].dump());
  return l;
}

struct EvalArgs {
  std::string ckpt, data, split = "test", report, rebind, rebind_out;
};

void cmd_eval(const EvalArgs& a, Report& r) {
  Loaded l = load_trained(a.ckpt);
  if (!a.rebind.empty()) {
    BasisPtr bin = load_truncated(a.rebind, l.model.spec.basis_in->size());
    BasisPtr bout = a.rebind_out.empty() ? bin : load_truncated(a.rebind_out, l.model.spec.basis_out->size());
    l.model = rebind(l.model, bin, bout);
  } else if (!a.rebind_out.empty()) {
    throw UsageError("--rebind-out needs --rebind");
  }
  const Dataset ds = load_dataset(a.data);
  std::vector<std::size_t> idx;
  if (a.split == "test") idx = ds.test;
  else if (a.split == "train") idx = ds.train;
  else {
    idx.resize(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  const Metrics m = evaluate(l.model, l.in, l.out, ds, idx);
  json rep;
  rep["rel_l2"] = m.rel_l2;
  rep["mme"] = m.mme;
  rep["per_sample"] = {{"index", idx}, {"rel_l2", m.per_sample_rel_l2}, {"max_error", m.per_sample_max_error}};
  rep["config"] = l.extra.value("config", json::object());
  rep["config"]["split"] = a.split;
  if (!a.rebind.empty()) rep["config"]["rebind"] = l.model.input_domain_id;
  if (!a.report.empty()) {
    write_text(a.report, rep.dump(2) + "\n");
    r.output(a.report);
  }
  r.metrics = {{"rel_l2", m.rel_l2}, {"mme", m.mme}, {"samples", idx.size()}, {"split", a.split}};
  r.line(a.split + " split, " + std::to_string(idx.size()) + " samples");
  r.line("rel_l2 " + fmt(m.rel_l2) + ", mme " + fmt(m.mme));
}

// ---- sweep ----

struct SweepArgs {
  std::string kind = "modes", data, basis_in, out = "sweep.csv";
  std::vector<std::string> grid;
  bool compare_pod = false;
  ModelArgs model;
  TrainArgs train;
};

void cmd_sweep(const SweepArgs& a, const Globals& g, Report& r) {
  std::vector<double> grid;
  for (const auto& tok : a.grid) {
    if (tok.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !(v >= 1.0) || v != std::floor(v))
      throw UsageError("--grid values must be positive integers, got '" + tok + "'");
    grid.push_back(v);
  }
  if (grid.empty()) throw UsageError("--grid needs at least one value");
  if (a.model.basis != "lbo") throw UsageError("sweep always runs the LBO basis; use --compare-pod to add POD");
  const Dataset ds = load_dataset(a.data);
  const SpectralBasis lbo = load_basis(a.basis_in);
  const SweepKind kind = a.kind == "modes" ? SweepKind::Modes : SweepKind::DataSize;
  const Eigen::Index modes = a.model.modes > 0 ? a.model.modes : lbo.size();
  const TrainConfig cfg = train_config(a.train, a.model.seed);
  const auto rows = run_sweep(kind, grid, ds, lbo, model_options(a.model, modes), cfg, a.compare_pod,
                              [&](const SweepRow& row) {
                                if (!g.quiet && !g.json)
                                  std::cerr << to_string(row.basis) << " " << a.kind << "=" << row.value << "  rel_l2 "
                                            << fmt(row.rel_l2) << "  " << fmt(row.seconds) << " s\n";
                              });
  std::filesystem::path out = a.out;
  if (std::filesystem::is_directory(out) || a.out.back() == '/') out /= "sweep.csv";
  write_text(out, sweep_csv(rows, a.compare_pod));
  r.output(out);
  auto jr = json::array();
  r.line("basis  value  rel_l2  mme  seconds");
  for (const auto& row : rows) {
    jr.push_back({{"basis", to_string(row.basis)},
                  {"value", row.value},
                  {"rel_l2", row.rel_l2},
                  {"mme", row.mme},
                  {"seconds", row.seconds}});
    r.line(std::string(to_string(row.basis)) + "  " + fmt(row.value) + "  " + fmt(row.rel_l2) + "  " + fmt(row.mme) +
           "  " + fmt(row.seconds));
  }
  r.metrics = {{"kind", a.kind}, {"rows", std::move(jr)}};
}

// ---- verify ----

void cmd_verify(const std::string& suite, Report& r) {
  std::vector<std::string> names = suite == "all" ? verify::suite_names() : std::vector<std::string>{suite};
  auto suites = json::array();
  for (const auto& name : names) {
    verify::SuiteResult s;
    verify::run_named(name, s);
    r.ok = r.ok && s.pass();
    auto checks = json::array();
    r.line("[" + name + "] " + (s.pass() ? "pass" : "FAIL") + "  worst margin " + fmt(s.worst_margin()) + "  (" +
           fmt(s.seconds) + " s)");
    for (const auto& c : s.checks) {
      checks.push_back(
          {{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"limit", c.limit}, {"detail", c.detail}});
      r.line(std::string("  ") + (c.pass ? "pass " : "FAIL ") + c.name + ": " + fmt(c.value) + " <= " + fmt(c.limit) +
             (c.detail.empty() ? "" : "  " + c.detail));
    }
    suites.push_back({{"suite", name},
                      {"pass", s.pass()},
                      {"worst_margin", s.worst_margin()},
                      {"seconds", s.seconds},
                      {"checks", std::move(checks)}});
  }
  r.metrics = {{"suites", std::move(suites)}};
}

// ---- export-vtk ----

struct VtkArgs {
  std::string mesh, field, out, which = "output", name;
  std::size_t sample = 0;
};

Matrix read_field_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    const auto first = line.find_first_not_of(' ');
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    bool numeric = true;
    while (ls >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      // A header row is allowed before the first value.
      require(rows.empty(), ErrorKind::ParseError, path.string() + ":" + std::to_string(lineno) + ": not a number");
      continue;
    }
    require(rows.empty() || row.size() == rows.front().size(), ErrorKind::ParseError,
            path.string() + ":" + std::to_string(lineno) + ": column count differs from the first row");
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorKind::ParseError, path.string() + " holds no values");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void cmd_export_vtk(const VtkArgs& a, Report& r) {
  const Mesh mesh = load_mesh(a.mesh);
  Matrix field;
  std::string name = a.name;
  if (std::filesystem::path(a.field).extension() == ".nds") {
    const Dataset ds = load_dataset(a.field);
    require(a.sample < ds.size(), ErrorKind::IndexOutOfRange,
            "sample " + std::to_string(a.sample) + " not in dataset of " + std::to_string(ds.size()));
    field = a.which == "input" ? ds.inputs[a.sample] : ds.outputs[a.sample];
    require(ds.n_t == 0, ErrorKind::DimensionMismatch, "space-time samples cannot be exported on a spatial mesh");
    if (name.empty()) name = a.which;
  } else {
    field = read_field_text(a.field);
    if (name.empty()) name = "field";
  }
  const std::string text = to_vtk(mesh, field, name);
  write_text(a.out, text);
  r.output(a.out);
  r.metrics = {{"points", mesh.num_vertices()}, {"cells", mesh.num_cells()}, {"channels", field.cols()}};
  r.line(std::to_string(mesh.num_vertices()) + " points, " + std::to_string(field.cols()) + " channel(s)");
}

// ---- gradcheck ----

struct GradArgs {
  std::string ckpt, data;
  std::size_t sample = 0;
  int grid = 6;
  ModelArgs model;
  std::size_t params = 30;
  double step = 1e-6;
  double tol = 1e-5;
  std::uint64_t seed = 0;
};

void cmd_gradcheck(GradArgs a, Report& r) {
  NormModel model;
  Matrix input;
  if (!a.ckpt.empty()) {
    if (a.data.empty()) throw UsageError("--ckpt needs --data for the input sample");
    Loaded l = load_trained(a.ckpt);
    const Dataset ds = load_dataset(a.data);
    require(a.sample < ds.size(), ErrorKind::IndexOutOfRange, "sample " + std::to_string(a.sample) + " not in dataset");
    input = ds.inputs[a.sample];
    l.in.apply(input);
    model = std::move(l.model);
  } else {
    if (!a.data.empty()) throw UsageError("--data is only used with --ckpt");
    const Mesh mesh = unit_square_grid(a.grid);
    const Eigen::Index modes = a.model.modes > 0 ? a.model.modes : 8;
    auto basis = std::make_shared<const SpectralBasis>(
        lbo_basis(cotangent_stiffness(mesh), lumped_mass(mesh), modes, mesh.content_hash()));
    ArchSpec spec;
    spec.d_v = a.model.width;
    spec.layers = a.model.layers;
    spec.activation = parse_activation(a.model.activation);
    spec.p_hidden = a.model.p_hidden;
    spec.q_hidden = a.model.q_hidden;
    spec.seed = a.model.seed;
    spec.basis_in = basis;
    model = build_model(spec);
    Rng rng(a.seed + 1);
    // Small nonzero biases so every parameter reaches the output.
    for (auto& t : model.theta) t += 0.1 * rng.normal();
    input.resize(mesh.num_vertices(), 1);
    for (Eigen::Index v = 0; v < input.rows(); ++v) input(v, 0) = rng.normal();
  }
  const auto res = gradcheck(model, Field(input, model.input_domain_id), a.params, a.step, a.seed);
  const bool diagnostic = a.step > 1e-4;
  r.ok = diagnostic || res.max_rel_error <= a.tol;
  r.metrics = {{"max_rel_error", res.max_rel_error},
               {"worst_param", res.worst_param},
               {"checked", res.checked.size()},
               {"step", a.step},
               {"mode", diagnostic ? "diagnostic" : "check"}};
  if (!diagnostic) r.metrics["tolerance"] = a.tol;
  r.line(std::to_string(res.checked.size()) + " of " + std::to_string(model.param_count()) +
         " parameters, step " + fmt(a.step));
  r.line("max relative error " + fmt(res.max_rel_error) +
         (diagnostic ? " (diagnostic: step above 1e-4, no verdict)" : (r.ok ? " <= " : " > ") + fmt(a.tol)));
}

// ---- driver ----

void print_report(const Report& r, const Globals& g, double seconds, const std::string& error) {
  if (g.json) {
    json j;
    j["command"] = r.command;
    j["status"] = r.ok ? "ok" : "failed";
    j["outputs"] = r.outputs;
    j["metrics"] = r.metrics;
    j["elapsed_seconds"] = seconds;
    if (!error.empty()) j["error"] = error;
    std::cout << j.dump(2) << '\n';
    return;
  }
  if (!error.empty()) {
    std::cerr << "norm " << r.command << ": " << error << '\n';
    return;
  }
  if (g.quiet && r.ok) return;
  for (const auto& l : r.lines) std::cout << l << '\n';
  for (const auto& o : r.outputs) std::cout << "wrote " << o << '\n';
  std::cout << r.command << ": " << (r.ok ? "ok" : "FAILED") << " (" << fmt(seconds) << " s)\n";
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Neural operators on Riemannian manifolds", "norm"};
  app.require_subcommand(1);
  // Global flags are accepted after the subcommand too.
  app.fallthrough();
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (default: NORM_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--json", g.json, "Print the command report as JSON");
  app.add_flag("-q,--quiet", g.quiet, "Only print errors");
  app.add_flag("-v,--verbose", g.verbose, "Print progress details");
  app.add_option("--simd", g.simd, "Kernel variant: scalar, avx2, avx512 or neon (default: NORM_SIMD or best)");

  // mesh
  auto* mesh = app.add_subcommand("mesh", "Generate or inspect meshes");
  mesh->require_subcommand(1);
  MeshGenArgs grid_args, notch_args;
  auto* mesh_grid = mesh->add_subcommand("grid", "Unit square grid of right triangles");
  mesh_grid->add_option("--n", grid_args.n, "Cells per side")->required()->check(CLI::PositiveNumber);
  mesh_grid->add_option("--out", grid_args.out, "Output mesh (.json, .off, .obj)");
  auto* mesh_notch = mesh->add_subcommand("notch", "Unit square with an interior slit");
  mesh_notch->add_option("--n", notch_args.n, "Cells per side")->required()->check(CLI::PositiveNumber);
  mesh_notch->add_option("--out", notch_args.out, "Output mesh (.json, .off, .obj)");
  std::string info_path;
  auto* mesh_info = mesh->add_subcommand("info", "Summarize a mesh file");
  mesh_info->add_option("--mesh", info_path, "Mesh file")->required();

  // lbo
  auto* lbo = app.add_subcommand("lbo", "Laplace-Beltrami bases");
  lbo->require_subcommand(1);
  LboArgs lbo_args;
  auto* lbo_compute = lbo->add_subcommand("compute", "Smallest LBO eigenpairs of a mesh");
  lbo_compute->add_option("--mesh", lbo_args.mesh, "Mesh file")->required();
  lbo_compute->add_option("--modes", lbo_args.modes, "Number of modes")->check(CLI::PositiveNumber);
  lbo_compute->add_option("--out", lbo_args.out, "Basis file (.nsb)")->required();
  lbo_compute->add_option("--solver", lbo_args.solver, "auto, dense or lanczos")
      ->check(CLI::IsMember({"auto", "dense", "lanczos"}));

  // data
  auto* data = app.add_subcommand("data", "Synthetic datasets");
  data->require_subcommand(1);
  auto* data_gen = data->add_subcommand("gen", "Generate a dataset");
  data_gen->require_subcommand(1);
  DataArgs darcy_args, heat_args;
  darcy_args.n = 1200;
  heat_args.n = 500;
  auto* gen_darcy = data_gen->add_subcommand("darcy", "Darcy flow with thresholded GRF permeability");
  auto* gen_heat = data_gen->add_subcommand("heat", "Heat semigroup applied to GRF initial data");
  for (auto [c, d] : {std::pair{gen_darcy, &darcy_args}, std::pair{gen_heat, &heat_args}}) {
    c->add_option("--mesh", d->mesh, "Mesh file")->required();
    c->add_option("--n", d->n, "Number of samples")->check(CLI::PositiveNumber);
    c->add_option("--seed", d->seed, "Base seed (sample i uses seed xor i)");
    c->add_option("--out", d->out, "Dataset file (.nds)")->required();
    c->add_option("--shift", d->shift, "GRF covariance shift")->check(CLI::PositiveNumber);
    c->add_option("--power", d->power, "GRF covariance power (>= 1)")->check(CLI::Range(1.0, 64.0));
  }
  gen_darcy->add_option("--source", darcy_args.source, "Constant source term f");
  gen_darcy->add_option("--grf-modes", darcy_args.grf_modes, "LBO modes of the GRF expansion")
      ->check(CLI::PositiveNumber);
  gen_heat->add_option("--t", heat_args.t, "Diffusion time")->check(CLI::NonNegativeNumber);

  // train
  TrainCmdArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a NORM model");
  train_cmd->add_option("--data", train_args.data, "Dataset (.nds)")->required();
  train_cmd->add_option("--basis-in", train_args.basis_in, "Input LBO basis (.nsb)");
  train_cmd->add_option("--basis-out", train_args.basis_out, "Output LBO basis for cross-manifold models");
  train_cmd->add_option("--out", train_args.out, "Checkpoint directory")->required();
  add_model_options(train_cmd, train_args.model);
  add_train_options(train_cmd, train_args.train, train_args.model.seed);

  // eval
  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", eval_args.ckpt, "Checkpoint directory")->required();
  eval_cmd->add_option("--data", eval_args.data, "Dataset (.nds)")->required();
  eval_cmd->add_option("--split", eval_args.split, "test, train or all")->check(CLI::IsMember({"test", "train", "all"}));
  eval_cmd->add_option("--report", eval_args.report, "Metrics JSON file");
  eval_cmd->add_option("--rebind", eval_args.rebind, "Evaluate on another discretisation: basis (.nsb) of its mesh");
  eval_cmd->add_option("--rebind-out", eval_args.rebind_out, "Output basis for a rebound cross-manifold model");

  // sweep
  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train one model per grid value");
  sweep_cmd->add_option("--kind", sweep_args.kind, "modes or datasize")->check(CLI::IsMember({"modes", "datasize"}));
  sweep_cmd->add_option("--grid", sweep_args.grid, "Comma-separated values")->delimiter(',')->required();
  sweep_cmd->add_option("--data", sweep_args.data, "Dataset (.nds)")->required();
  sweep_cmd->add_option("--basis-in", sweep_args.basis_in, "LBO basis (.nsb) with at least max(grid) modes")
      ->required();
  sweep_cmd->add_flag("--compare-pod", sweep_args.compare_pod, "Also train POD-NORM at every grid value");
  sweep_cmd->add_option("--out", sweep_args.out, "CSV path or directory");
  add_model_options(sweep_cmd, sweep_args.model);
  add_train_options(sweep_cmd, sweep_args.train, sweep_args.model.seed);

  // verify
  std::string suite = "all";
  auto* verify_cmd = app.add_subcommand("verify", "Run verification suites");
  std::vector<std::string> suites = verify::suite_names();
  suites.push_back("all");
  verify_cmd->add_option("--suite", suite, "spectrum, bound, gradcheck, tensor-oracle, fem or all")
      ->check(CLI::IsMember(suites));

  // export-vtk
  VtkArgs vtk_args;
  auto* vtk_cmd = app.add_subcommand("export-vtk", "Write a nodal field as legacy VTK");
  vtk_cmd->add_option("--mesh", vtk_args.mesh, "Mesh file")->required();
  vtk_cmd->add_option("--field", vtk_args.field, "Dataset (.nds) or text/CSV file with one row per node")->required();
  vtk_cmd->add_option("--out", vtk_args.out, "VTK file")->required();
  vtk_cmd->add_option("--sample", vtk_args.sample, "Sample index in a dataset");
  vtk_cmd->add_option("--which", vtk_args.which, "input or output")->check(CLI::IsMember({"input", "output"}));
  vtk_cmd->add_option("--name", vtk_args.name, "Field name in the VTK file");

  // gradcheck
  GradArgs grad_args;
  grad_args.model.width = 4;
  grad_args.model.layers = 2;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Central-difference check of the model gradient");
  grad_cmd->add_option("--ckpt", grad_args.ckpt, "Checkpoint to check (default: a fresh model)");
  grad_cmd->add_option("--data", grad_args.data, "Dataset supplying the input sample for --ckpt");
  grad_cmd->add_option("--sample", grad_args.sample, "Sample index");
  grad_cmd->add_option("--grid", grad_args.grid, "Cells per side of the fresh model's mesh")->check(CLI::Range(1, 256));
  grad_cmd->add_option("--modes", grad_args.model.modes, "Modes of the fresh model (default 8)");
  grad_cmd->add_option("--width", grad_args.model.width, "Width of the fresh model")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--layers", grad_args.model.layers, "L-layers of the fresh model")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--activation", grad_args.model.activation, "gelu, relu or identity")
      ->check(CLI::IsMember({"gelu", "relu", "identity"}));
  grad_cmd->add_option("--q-hidden", grad_args.model.q_hidden, "Projection hidden width (0: affine)");
  grad_cmd->add_option("--p-hidden", grad_args.model.p_hidden, "Lifting hidden width (0: affine)");
  grad_cmd->add_option("--params", grad_args.params, "Parameters to check")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--step", grad_args.step, "Finite-difference step (above 1e-4: diagnostic only)")
      ->check(CLI::PositiveNumber);
  grad_cmd->add_option("--tol", grad_args.tol, "Pass threshold on the max relative error")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--seed", grad_args.seed, "Seed for parameter choice and the probe");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  log::set_level(g.quiet ? log::Level::Quiet : g.verbose ? log::Level::Info : log::Level::Warn);

  Report r;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  try {
    if (g.threads > 0) set_thread_count(g.threads);
    if (!g.simd.empty()) {
      kernels::Isa isa;
      if (!kernels::parse_isa(g.simd, isa)) throw UsageError("unknown --simd variant '" + g.simd + "'");
      kernels::select(isa);
    }
    const std::vector<std::pair<CLI::App*, std::function<void()>>> commands{
        {mesh_grid, [&] { cmd_mesh_gen(grid_args, false, r); }},
        {mesh_notch, [&] { cmd_mesh_gen(notch_args, true, r); }},
        {mesh_info, [&] { cmd_mesh_info(info_path, r); }},
        {lbo_compute, [&] { cmd_lbo(lbo_args, r); }},
        {gen_darcy, [&] { cmd_data_darcy(darcy_args, r); }},
        {gen_heat, [&] { cmd_data_heat(heat_args, r); }},
        {train_cmd, [&] { cmd_train(train_args, g, r); }},
        {eval_cmd, [&] { cmd_eval(eval_args, r); }},
        {sweep_cmd, [&] { cmd_sweep(sweep_args, g, r); }},
        {verify_cmd, [&] { cmd_verify(suite, r); }},
        {vtk_cmd, [&] { cmd_export_vtk(vtk_args, r); }},
        {grad_cmd, [&] { cmd_gradcheck(grad_args, r); }},
    };
    for (const auto& [sub, fn] : commands) {
      if (!sub->parsed()) continue;
      for (auto* p = sub; p != &app; p = p->get_parent()) r.command = p->get_name() + (r.command.empty() ? "" : " " + r.command);
      fn();
    }
  } catch (const UsageError& e) {
    r.ok = false;
    if (g.json) print_report(r, g, elapsed(), e.what());
    std::cerr << "usage error: " << e.what() << "\nRun with --help for more information.\n";
    return 2;
  } catch (const std::exception& e) {
    r.ok = false;
    print_report(r, g, elapsed(), e.what());
    if (g.json) std::cerr << "norm " << r.command << ": " << e.what() << '\n';
    return 1;
  }
  print_report(r, g, elapsed(), {});
  return r.ok ? 0 : 1;
}

}  // namespace norm::cli
