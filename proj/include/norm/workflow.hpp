#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "norm/data/dataset.hpp"
#include "norm/op/model.hpp"
#include "norm/training/train.hpp"

namespace norm {

enum class BasisChoice { LBO, POD };

const char* to_string(BasisChoice b);
BasisChoice parse_basis_choice(const std::string& s);

// Architecture knobs exposed by the CLI. Same-manifold unless a distinct
// output basis is given.
struct ModelOptions {
  Eigen::Index modes = 128;
  Eigen::Index width = 32;
  int layers = 4;
  Activation activation = Activation::GELU;
  Eigen::Index p_hidden = 0;
  Eigen::Index q_hidden = 128;
  std::uint64_t seed = 0;
};

// Uncentred POD of the listed training inputs and outputs together, so one
// basis serves both sides of a same-manifold model.
BasisPtr pod_for(const Dataset& data, const std::vector<std::size_t>& train, Eigen::Index d_m);

ArchSpec arch_for(const Dataset& data, const ModelOptions& opts, BasisPtr basis_in, BasisPtr basis_out = nullptr);

struct FitResult {
  TrainResult trained;
  Metrics test;
  double seconds = 0.0;
};

FitResult fit(const Dataset& data, const ArchSpec& arch, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// {"model": ..., "train": ...} for checkpoint and report metadata.
std::string config_json(const ArchSpec& arch, const TrainConfig& cfg, BasisChoice basis);

enum class SweepKind { Modes, DataSize };

struct SweepRow {
  BasisChoice basis;
  double value;
  double rel_l2, mme, seconds;
};

// One model per grid value. Modes: the LBO basis is truncated (POD recomputed)
// to the value. DataSize: the first `value` training samples are used with
// d_m = opts.modes. The test split is never changed.
std::vector<SweepRow> run_sweep(SweepKind kind, const std::vector<double>& grid, const Dataset& data,
                                const SpectralBasis& lbo, const ModelOptions& opts, const TrainConfig& cfg,
                                bool compare_pod, const std::function<void(const SweepRow&)>& on_row = {});

std::string sweep_csv(const std::vector<SweepRow>& rows, bool with_basis);

}  // namespace norm
