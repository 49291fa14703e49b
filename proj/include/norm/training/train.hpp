#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "norm/data/dataset.hpp"
#include "norm/field.hpp"
#include "norm/op/model.hpp"

namespace norm {

enum class LrSchedule { Constant, StepHalving };
enum class Normalization { None, GlobalPerChannel };

struct TrainConfig {
  int epochs = 1000;
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  LrSchedule schedule = LrSchedule::StepHalving;
  int halve_every = 100;
  std::uint64_t seed = 0;
  Normalization normalization = Normalization::GlobalPerChannel;
  double weight_decay = 0.0;
  // Test-set evaluation period in epochs (the last epoch is always evaluated).
  int eval_every = 0;
  // Samples per forward/backward pass inside a batch; bounds memory.
  std::size_t micro_batch = 16;
};

void validate(const TrainConfig& cfg);

struct Metrics {
  double rel_l2 = 0.0;
  double mme = 0.0;
  std::vector<double> per_sample_rel_l2;
  std::vector<double> per_sample_max_error;
};

// ||pred - target||_2 / ||target||_2 over all nodes and channels.
double rel_l2(const Matrix& pred, const Matrix& target);
double rel_l2(const Field& pred, const Field& target);

// Mean over samples of max |pred - target|.
double mme_batch(const std::vector<Matrix>& preds, const std::vector<Matrix>& targets);

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// Bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

// Per-channel affine map x -> (x - mean) / std.
struct Normalizer {
  Vector mean, std;

  bool empty() const { return mean.size() == 0; }
  void apply(Matrix& x) const;
  void invert(Matrix& x) const;
  std::string to_json() const;
  static Normalizer from_json(const std::string& text);
};

// Statistics over every node of the listed samples. Channels with std below
// 1e-12 pass through unchanged (with a warning).
Normalizer fit_normalizer(const std::vector<Matrix>& samples, const std::vector<std::size_t>& indices,
                          Normalization mode);

struct EpochRecord {
  int epoch;
  double train_loss;
  double test_rel_l2;  // NaN when not evaluated this epoch
  double seconds;
};

struct TrainResult {
  NormModel model;
  Normalizer input_norm, output_norm;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Minimises the mean per-sample relative L2 error (in original units) with
// Adam over shuffled minibatches. Throws NonFiniteLoss naming the sample.
TrainResult train(NormModel model, const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Metrics on the listed samples; predictions are denormalized first.
Metrics evaluate(const NormModel& model, const Normalizer& input_norm, const Normalizer& output_norm,
                 const Dataset& data, const std::vector<std::size_t>& indices);

// Denormalized predictions for the listed samples.
std::vector<Matrix> predict(const NormModel& model, const Normalizer& input_norm, const Normalizer& output_norm,
                            const std::vector<Matrix>& inputs, const std::vector<std::size_t>& indices,
                            std::size_t micro_batch = 16);

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::vector<std::size_t> checked;
};

// Central differences of <G, forward(A)> (G seeded standard normal) on
// n_params parameters drawn without replacement, against backward().
// Relative error |g - fd| / max(|g|, |fd|, 1e-6 * max|g|).
GradcheckResult gradcheck(const NormModel& model, const Field& a, std::size_t n_params, double step = 1e-6,
                          std::uint64_t seed = 0);
// Same objective on an explicit parameter list.
GradcheckResult gradcheck(const NormModel& model, const Field& a, const std::vector<std::size_t>& indices,
                          double step = 1e-6, std::uint64_t seed = 0);

}  // namespace norm
