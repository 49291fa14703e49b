#include "norm/workflow.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "norm/error.hpp"

namespace norm {

const char* to_string(BasisChoice b) { return b == BasisChoice::LBO ? "lbo" : "pod"; }

BasisChoice parse_basis_choice(const std::string& s) {
  if (s == "lbo") return BasisChoice::LBO;
  if (s == "pod") return BasisChoice::POD;
  fail(ErrorKind::InvalidSpec, "unknown basis '" + s + "' (expected lbo or pod)");
}

BasisPtr pod_for(const Dataset& data, const std::vector<std::size_t>& train, Eigen::Index d_m) {
  require(data.input_domain_id == data.output_domain_id, ErrorKind::InvalidSpec,
          "POD-NORM needs inputs and outputs on one domain");
  std::vector<Field> snaps;
  snaps.reserve(2 * train.size());
  for (auto i : train) snaps.push_back(data.input(i));
  for (auto i : train) snaps.push_back(data.output(i));
  return std::make_shared<const SpectralBasis>(pod_basis(snaps, d_m, PodOptions{false}));
}

ArchSpec arch_for(const Dataset& data, const ModelOptions& opts, BasisPtr basis_in, BasisPtr basis_out) {
  require(!data.inputs.empty(), ErrorKind::EmptyBatch, "dataset is empty");
  ArchSpec a;
  a.d_a = data.inputs.front().cols();
  a.d_u = data.outputs.front().cols();
  a.d_v = opts.width;
  a.layers = opts.layers;
  a.activation = opts.activation;
  a.p_hidden = opts.p_hidden;
  a.q_hidden = opts.q_hidden;
  a.seed = opts.seed;
  a.basis_in = std::move(basis_in);
  a.basis_out = basis_out ? std::move(basis_out) : a.basis_in;
  a.wiring = a.basis_out == a.basis_in ? Wiring::SameManifold : Wiring::CrossManifold;
  a.domain_in = data.input_domain_id;
  a.domain_out = data.output_domain_id;
  return a;
}

FitResult fit(const Dataset& data, const ArchSpec& arch, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  const auto t0 = std::chrono::steady_clock::now();
  FitResult r;
  r.trained = train(build_model(arch), data, cfg, on_epoch);
  r.test = evaluate(r.trained.model, r.trained.input_norm, r.trained.output_norm, data, data.test);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string config_json(const ArchSpec& arch, const TrainConfig& cfg, BasisChoice basis) {
  nlohmann::ordered_json j;
  j["model"] = {{"wiring", to_string(arch.wiring)},
                {"basis", to_string(basis)},
                {"modes", arch.basis_in ? arch.basis_in->size() : 0},
                {"width", arch.d_v},
                {"layers", arch.layers},
                {"activation", to_string(arch.activation)},
                {"p_hidden", arch.p_hidden},
                {"q_hidden", arch.q_hidden},
                {"seed", arch.seed}};
  j["train"] = {{"epochs", cfg.epochs},
                {"batch", cfg.batch_size},
                {"lr", cfg.learning_rate},
                {"schedule", cfg.schedule == LrSchedule::StepHalving ? "step-halving" : "constant"},
                {"halve_every", cfg.halve_every},
                {"normalization", cfg.normalization == Normalization::None ? "none" : "global"},
                {"weight_decay", cfg.weight_decay},
                {"seed", cfg.seed}};
  return j.dump();
}

std::vector<SweepRow> run_sweep(SweepKind kind, const std::vector<double>& grid, const Dataset& data,
                                const SpectralBasis& lbo, const ModelOptions& opts, const TrainConfig& cfg,
                                bool compare_pod, const std::function<void(const SweepRow&)>& on_row) {
  require(!grid.empty(), ErrorKind::InvalidSpec, "sweep grid is empty");
  std::vector<SweepRow> rows;
  for (double value : grid) {
    require(value >= 1.0 && value == std::floor(value), ErrorKind::InvalidSpec, "sweep values must be positive integers");
    const auto v = static_cast<std::size_t>(value);
    Dataset sub = data;
    Eigen::Index d_m = opts.modes;
    if (kind == SweepKind::Modes) {
      d_m = static_cast<Eigen::Index>(v);
    } else {
      require(v <= data.train.size(), ErrorKind::InvalidSpec,
              "data size " + std::to_string(v) + " exceeds the training split (" + std::to_string(data.train.size()) + ")");
      sub.train.resize(v);
    }
    require(d_m <= lbo.size(), ErrorKind::InvalidModeCount,
            "sweep needs " + std::to_string(d_m) + " modes but the basis has " + std::to_string(lbo.size()));
    for (BasisChoice b : {BasisChoice::LBO, BasisChoice::POD}) {
      if (b == BasisChoice::POD && !compare_pod) continue;
      BasisPtr basis = b == BasisChoice::LBO ? std::make_shared<const SpectralBasis>(lbo.truncated(d_m))
                                             : pod_for(sub, sub.train, d_m);
      ModelOptions o = opts;
      o.modes = d_m;
      const FitResult f = fit(sub, arch_for(sub, o, basis), cfg);
      rows.push_back(SweepRow{b, value, f.test.rel_l2, f.test.mme, f.seconds});
      if (on_row) on_row(rows.back());
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, bool with_basis) {
  std::string out = with_basis ? "basis,value,rel_l2,mme,seconds\n" : "value,rel_l2,mme,seconds\n";
  char buf[160];
  for (const auto& r : rows) {
    if (with_basis) out += std::string(to_string(r.basis)) + ",";
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.3f\n", r.value, r.rel_l2, r.mme, r.seconds);
    out += buf;
  }
  return out;
}

}  // namespace norm
