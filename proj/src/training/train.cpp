#include "norm/training/train.hpp"

#include <chrono>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>

#include "norm/error.hpp"
#include "norm/kernels/kernels.hpp"
#include "norm/log.hpp"
#include "norm/parallel.hpp"
#include "norm/rng.hpp"

namespace norm {

void validate(const TrainConfig& cfg) {
  require(cfg.epochs >= 1, ErrorKind::InvalidSpec, "epochs must be >= 1");
  require(cfg.batch_size >= 1, ErrorKind::InvalidSpec, "batch size must be >= 1");
  require(cfg.learning_rate > 0.0, ErrorKind::InvalidSpec, "learning rate must be > 0");
  require(cfg.schedule == LrSchedule::Constant || cfg.halve_every >= 1, ErrorKind::InvalidSpec,
          "halving period must be >= 1");
  require(cfg.micro_batch >= 1, ErrorKind::InvalidSpec, "micro batch must be >= 1");
  require(cfg.weight_decay >= 0.0, ErrorKind::InvalidSpec, "weight decay must be >= 0");
}

double rel_l2(const Matrix& pred, const Matrix& target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), ErrorKind::ShapeMismatch,
          "prediction and target shapes differ");
  const double t = target.norm();
  require(t > 0.0, ErrorKind::ZeroTarget, "target has zero norm");
  return (pred - target).norm() / t;
}

double rel_l2(const Field& pred, const Field& target) { return rel_l2(pred.values, target.values); }

double mme_batch(const std::vector<Matrix>& preds, const std::vector<Matrix>& targets) {
  require(!preds.empty(), ErrorKind::EmptyBatch, "no samples");
  require(preds.size() == targets.size(), ErrorKind::ShapeMismatch, "prediction and target counts differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    require(preds[i].rows() == targets[i].rows() && preds[i].cols() == targets[i].cols(), ErrorKind::ShapeMismatch,
            "sample " + std::to_string(i) + " shape mismatch");
    sum += (preds[i] - targets[i]).cwiseAbs().maxCoeff();
  }
  return sum / static_cast<double>(preds.size());
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& st, double lr) {
  require(params.size() == grads.size(), ErrorKind::ShapeMismatch, "parameter and gradient sizes differ");
  if (st.m.empty()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  require(st.m.size() == params.size() && st.v.size() == params.size(), ErrorKind::ShapeMismatch,
          "optimizer state size differs from the parameters");
  ++st.step;
  const double t = static_cast<double>(st.step);
  const double bc1 = 1.0 - std::pow(st.beta1, t);
  const double bc2 = 1.0 - std::pow(st.beta2, t);
  kernels::active().adam_update(params.size(), params.data(), grads.data(), st.m.data(), st.v.data(), lr, st.beta1,
                                st.beta2, st.eps, bc1, bc2);
}

void Normalizer::apply(Matrix& x) const {
  if (empty()) return;
  require(x.cols() == mean.size(), ErrorKind::ShapeMismatch, "normalizer channel count differs");
  for (Eigen::Index c = 0; c < x.cols(); ++c) x.col(c) = (x.col(c).array() - mean(c)) / std(c);
}

void Normalizer::invert(Matrix& x) const {
  if (empty()) return;
  require(x.cols() == mean.size(), ErrorKind::ShapeMismatch, "normalizer channel count differs");
  for (Eigen::Index c = 0; c < x.cols(); ++c) x.col(c) = x.col(c).array() * std(c) + mean(c);
}

std::string Normalizer::to_json() const {
  nlohmann::json j;
  j["mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
  j["std"] = std::vector<double>(std.data(), std.data() + std.size());
  return j.dump();
}

Normalizer Normalizer::from_json(const std::string& text) {
  Normalizer n;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto m = j.at("mean").get<std::vector<double>>();
    const auto s = j.at("std").get<std::vector<double>>();
    require(m.size() == s.size(), ErrorKind::ParseError, "normalizer mean/std lengths differ");
    n.mean = Eigen::Map<const Vector>(m.data(), static_cast<Eigen::Index>(m.size()));
    n.std = Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, "normalizer: " + std::string(e.what()));
  }
  return n;
}

Normalizer fit_normalizer(const std::vector<Matrix>& samples, const std::vector<std::size_t>& indices,
                          Normalization mode) {
  Normalizer n;
  if (mode == Normalization::None) return n;
  require(!indices.empty(), ErrorKind::EmptyBatch, "normalizer needs at least one training sample");
  const Eigen::Index c = samples.at(indices[0]).cols();
  Vector sum = Vector::Zero(c);
  double count = 0.0;
  for (auto i : indices) {
    sum += samples.at(i).colwise().sum().transpose();
    count += static_cast<double>(samples[i].rows());
  }
  n.mean = sum / count;
  Vector sq = Vector::Zero(c);
  for (auto i : indices) sq += (samples[i].rowwise() - n.mean.transpose()).array().square().matrix().colwise().sum().transpose();
  n.std = (sq / count).cwiseSqrt();
  for (Eigen::Index k = 0; k < c; ++k) {
    if (!(n.std(k) >= 1e-12)) {
      log::warn("channel " + std::to_string(k) + " has zero variance; passing it through unscaled");
      n.mean(k) = 0.0;
      n.std(k) = 1.0;
    }
  }
  return n;
}

namespace {

Matrix pack_indices(const std::vector<Matrix>& xs, const std::size_t* idx, std::size_t count) {
  std::vector<const Matrix*> ptrs(count);
  for (std::size_t i = 0; i < count; ++i) ptrs[i] = &xs[idx[i]];
  return pack_samples(ptrs);
}

void check_model_data(const NormModel& model, const Dataset& data) {
  require(data.size() > 0, ErrorKind::EmptyBatch, "dataset is empty");
  if (!data.input_domain_id.empty() && data.input_domain_id != model.input_domain_id)
    fail(ErrorKind::DomainMismatch, "dataset inputs live on a different domain than the model input");
  if (!data.output_domain_id.empty() && data.output_domain_id != model.output_domain_id)
    fail(ErrorKind::DomainMismatch, "dataset outputs live on a different domain than the model output");
  require(data.inputs[0].rows() == model.input_nodes() && data.inputs[0].cols() == model.spec.d_a,
          ErrorKind::DimensionMismatch, "dataset input shape does not match the model");
  require(data.outputs[0].rows() == model.output_nodes() && data.outputs[0].cols() == model.spec.d_u,
          ErrorKind::DimensionMismatch, "dataset output shape does not match the model");
}

}  // namespace

std::vector<Matrix> predict(const NormModel& model, const Normalizer& input_norm, const Normalizer& output_norm,
                            const std::vector<Matrix>& inputs, const std::vector<std::size_t>& indices,
                            std::size_t micro_batch) {
  std::vector<Matrix> out(indices.size());
  parallel_chunks(indices.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; s += micro_batch) {
      const std::size_t count = std::min(micro_batch, end - s);
      std::vector<Matrix> normed(count);
      std::vector<const Matrix*> ptrs(count);
      for (std::size_t i = 0; i < count; ++i) {
        normed[i] = inputs.at(indices[s + i]);
        input_norm.apply(normed[i]);
        ptrs[i] = &normed[i];
      }
      const Matrix y = forward_batch(model, pack_samples(ptrs), static_cast<Eigen::Index>(count));
      for (std::size_t i = 0; i < count; ++i) {
        out[s + i] = unpack_sample(y, static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(i));
        output_norm.invert(out[s + i]);
      }
    }
  });
  return out;
}

Metrics evaluate(const NormModel& model, const Normalizer& input_norm, const Normalizer& output_norm,
                 const Dataset& data, const std::vector<std::size_t>& indices) {
  require(!indices.empty(), ErrorKind::EmptyBatch, "evaluation split is empty");
  check_model_data(model, data);
  const auto preds = predict(model, input_norm, output_norm, data.inputs, indices);
  Metrics m;
  std::vector<Matrix> targets;
  targets.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Matrix& t = data.outputs.at(indices[i]);
    m.per_sample_rel_l2.push_back(rel_l2(preds[i], t));
    m.per_sample_max_error.push_back((preds[i] - t).cwiseAbs().maxCoeff());
  }
  m.rel_l2 = std::accumulate(m.per_sample_rel_l2.begin(), m.per_sample_rel_l2.end(), 0.0) /
             static_cast<double>(indices.size());
  m.mme = std::accumulate(m.per_sample_max_error.begin(), m.per_sample_max_error.end(), 0.0) /
          static_cast<double>(indices.size());
  return m;
}

TrainResult train(NormModel model, const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  check_model_data(model, data);
  require(!data.train.empty(), ErrorKind::EmptyBatch, "training split is empty");

  TrainResult res;
  res.input_norm = fit_normalizer(data.inputs, data.train, cfg.normalization);
  res.output_norm = fit_normalizer(data.outputs, data.train, cfg.normalization);

  std::vector<Matrix> inputs(data.size());
  for (auto i : data.train) {
    inputs[i] = data.inputs[i];
    res.input_norm.apply(inputs[i]);
  }
  Vector out_scale = res.output_norm.empty() ? Vector::Ones(model.spec.d_u) : res.output_norm.std;

  const std::size_t np = model.param_count();
  AdamState adam;
  Rng rng(cfg.seed);
  std::vector<std::size_t> order = data.train;
  std::vector<double> grad(np);
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the portable RNG.
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const double lr = cfg.schedule == LrSchedule::StepHalving
                          ? cfg.learning_rate * std::ldexp(1.0, -(epoch / cfg.halve_every))
                          : cfg.learning_rate;
    double loss_sum = 0.0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bsize = std::min(cfg.batch_size, order.size() - start);
      const std::size_t* idx = order.data() + start;
      const std::size_t parts = chunk_count(bsize);
      std::vector<std::vector<double>> part_grad(parts, std::vector<double>(np, 0.0));
      std::vector<std::vector<double>> losses(parts);

      parallel_chunks(bsize, [&](std::size_t part, std::size_t begin, std::size_t end) {
        BatchWorkspace ws;
        for (std::size_t s = begin; s < end; s += cfg.micro_batch) {
          const std::size_t count = std::min(cfg.micro_batch, end - s);
          const auto cb = static_cast<Eigen::Index>(count);
          const Matrix y = forward_batch(model, pack_indices(inputs, idx + s, count), cb, &ws);
          Matrix g(y.rows(), y.cols());
          for (std::size_t i = 0; i < count; ++i) {
            const std::size_t sample = idx[s + i];
            const Matrix& target = data.outputs[sample];
            Matrix pred = unpack_sample(y, cb, static_cast<Eigen::Index>(i));
            res.output_norm.invert(pred);
            const Matrix r = pred - target;
            const double tn = target.norm(), rn = r.norm();
            const double loss = rn / tn;
            if (!std::isfinite(loss))
              fail(ErrorKind::NonFiniteLoss, "non-finite loss at epoch " + std::to_string(epoch) + " for sample " +
                                                 std::to_string(sample));
            losses[part].push_back(loss);
            // d(mean loss)/d(normalized prediction)
            Matrix d = rn > 0.0 ? Matrix(r / (rn * tn * static_cast<double>(bsize))) : Matrix::Zero(r.rows(), r.cols());
            for (Eigen::Index c = 0; c < d.cols(); ++c) d.col(c) *= out_scale(c);
            const Eigen::Index cu = d.cols();
            g.middleCols(static_cast<Eigen::Index>(i) * cu, cu) = d;
          }
          backward_batch(model, ws, g, part_grad[part]);
        }
      });

      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t p = 0; p < parts; ++p) {
        for (double l : losses[p]) loss_sum += l;
        kernels::active().axpy(np, 1.0, part_grad[p].data(), grad.data());
      }
      if (cfg.weight_decay > 0.0) kernels::active().axpy(np, cfg.weight_decay, model.theta.data(), grad.data());
      for (std::size_t i = 0; i < np; ++i)
        if (!std::isfinite(grad[i]))
          fail(ErrorKind::NonFiniteLoss, "non-finite gradient at epoch " + std::to_string(epoch));
      adam_step(model.theta, grad, adam, lr);
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.test_rel_l2 = std::numeric_limits<double>::quiet_NaN();
    const bool last = epoch + 1 == cfg.epochs;
    if (!data.test.empty() && (last || (cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0)))
      rec.test_rel_l2 = evaluate(model, res.input_norm, res.output_norm, data, data.test).rel_l2;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  res.model = std::move(model);
  return res;
}

namespace {

GradcheckResult check_indices(const NormModel& model, const Field& a, const std::vector<std::size_t>& indices,
                              double step, const Matrix& gm, const Gradients& grads) {
  double gmax = 0.0;
  for (double v : grads.params) gmax = std::max(gmax, std::abs(v));
  GradcheckResult res;
  NormModel work = model;
  auto objective = [&](const NormModel& m) {
    const Field y = forward(m, a);
    return (y.values.array() * gm.array()).sum();
  };
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t p = indices[i];
    require(p < model.param_count(), ErrorKind::IndexOutOfRange, "parameter index " + std::to_string(p));
    const double orig = work.theta[p];
    work.theta[p] = orig + step;
    const double fp = objective(work);
    work.theta[p] = orig - step;
    const double fm = objective(work);
    work.theta[p] = orig;
    const double fd = (fp - fm) / (2.0 * step);
    const double an = grads.params[p];
    const double denom = std::max({std::abs(an), std::abs(fd), 1e-6 * gmax, 1e-300});
    const double err = std::abs(an - fd) / denom;
    res.checked.push_back(p);
    if (i == 0 || err > res.max_rel_error) {
      res.max_rel_error = err;
      res.worst_param = p;
    }
  }
  return res;
}

}  // namespace

GradcheckResult gradcheck(const NormModel& model, const Field& a, std::size_t n_params, double step,
                          std::uint64_t seed) {
  require(step > 0.0, ErrorKind::InvalidSpec, "finite-difference step must be > 0");
  Rng rng(seed);
  const Field y0 = forward(model, a);
  Matrix gm(y0.values.rows(), y0.values.cols());
  for (Eigen::Index i = 0; i < gm.size(); ++i) gm.data()[i] = rng.normal();
  const Gradients grads = backward(model, a, Field(gm, model.output_domain_id));

  const std::size_t np = model.param_count();
  std::vector<std::size_t> pool(np);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  const std::size_t n = std::min(n_params, np);
  for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + rng.below(np - i)]);
  pool.resize(n);
  return check_indices(model, a, pool, step, gm, grads);
}

GradcheckResult gradcheck(const NormModel& model, const Field& a, const std::vector<std::size_t>& indices,
                          double step, std::uint64_t seed) {
  require(step > 0.0, ErrorKind::InvalidSpec, "finite-difference step must be > 0");
  Rng rng(seed);
  const Field y0 = forward(model, a);
  Matrix gm(y0.values.rows(), y0.values.cols());
  for (Eigen::Index i = 0; i < gm.size(); ++i) gm.data()[i] = rng.normal();
  const Gradients grads = backward(model, a, Field(gm, model.output_domain_id));
  return check_indices(model, a, indices, step, gm, grads);
}

}  // namespace norm
