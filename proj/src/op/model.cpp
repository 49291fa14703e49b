#include <cmath>

#include "norm/error.hpp"
#include "norm/op/model.hpp"
#include "norm/rng.hpp"

namespace norm {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::GELU: return "gelu";
    case Activation::ReLU: return "relu";
    case Activation::Identity: return "identity";
  }
  return "?";
}

const char* to_string(Wiring w) {
  switch (w) {
    case Wiring::SameManifold: return "same";
    case Wiring::CrossManifold: return "cross";
    case Wiring::TemporalToManifold: return "temporal";
  }
  return "?";
}

const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Same: return "same";
    case LayerKind::Cross: return "cross";
    case LayerKind::TimeToSpaceTime: return "time-to-spacetime";
    case LayerKind::SpaceTime: return "spacetime";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "gelu") return Activation::GELU;
  if (s == "relu") return Activation::ReLU;
  if (s == "identity") return Activation::Identity;
  fail(ErrorKind::InvalidSpec, "unknown activation '" + s + "'");
}

Wiring parse_wiring(const std::string& s) {
  if (s == "same") return Wiring::SameManifold;
  if (s == "cross") return Wiring::CrossManifold;
  if (s == "temporal") return Wiring::TemporalToManifold;
  fail(ErrorKind::InvalidSpec, "unknown wiring '" + s + "'");
}

std::size_t NormModel::slot_index(const std::string& name) const {
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (slots[i].name == name) return i;
  fail(ErrorKind::InvalidSpec, "no parameter named " + name);
}

Eigen::Index NormModel::input_nodes() const {
  if (spec.wiring == Wiring::TemporalToManifold) return time_basis->nodes();
  return layers.front().basis_in->nodes();
}

Eigen::Index NormModel::output_nodes() const {
  const auto& last = layers.back();
  if (last.kind == LayerKind::TimeToSpaceTime || last.kind == LayerKind::SpaceTime)
    return last.time_basis->nodes() * last.basis_out->nodes();
  return last.basis_out->nodes();
}

namespace {

bool same_basis(const BasisPtr& a, const BasisPtr& b) {
  if (a == b) return true;
  return a->kind() == b->kind() && a->size() == b->size() && a->nodes() == b->nodes() &&
         a->source_id() == b->source_id();
}

class Layout {
 public:
  explicit Layout(NormModel& m) : m_(m) {}
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    m_.slots.push_back({std::move(name), offset_, rows, cols});
    offset_ += static_cast<std::size_t>(rows * cols);
    return m_.slots.size() - 1;
  }
  std::size_t size() const { return offset_; }

 private:
  NormModel& m_;
  std::size_t offset_ = 0;
};

void add_mlp(Layout& lay, std::vector<DenseRef>& out, const std::string& prefix, Eigen::Index in,
             Eigen::Index hidden, Eigen::Index dout, Activation act) {
  std::vector<Eigen::Index> dims{in};
  if (hidden > 0) dims.push_back(hidden);
  dims.push_back(dout);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::string p = prefix + "." + std::to_string(i);
    DenseRef d;
    d.w = lay.add(p + ".W", dims[i], dims[i + 1]);
    d.b = lay.add(p + ".b", 1, dims[i + 1]);
    d.in = dims[i];
    d.out = dims[i + 1];
    d.activation = i + 2 < dims.size() ? act : Activation::Identity;
    out.push_back(d);
  }
}

}  // namespace

NormModel build_model(const ArchSpec& spec_in) {
  ArchSpec spec = spec_in;
  require(spec.d_a >= 1 && spec.d_u >= 1 && spec.d_v >= 1, ErrorKind::InvalidSpec, "channel counts must be >= 1");
  require(spec.layers >= 1, ErrorKind::InvalidSpec, "at least one L-layer is required");
  require(spec.p_hidden >= 0 && spec.q_hidden >= 0, ErrorKind::InvalidSpec, "hidden widths must be >= 0");

  NormModel m;
  const Eigen::Index dv = spec.d_v;
  std::vector<LayerKind> kinds(static_cast<std::size_t>(spec.layers), LayerKind::Same);
  int transition = spec.transition < 0 ? spec.layers / 2 : spec.transition;

  switch (spec.wiring) {
    case Wiring::SameManifold: {
      require(spec.basis_in != nullptr, ErrorKind::InvalidSpec, "same-manifold model needs a basis");
      if (!spec.basis_out) spec.basis_out = spec.basis_in;
      require(same_basis(spec.basis_in, spec.basis_out), ErrorKind::InvalidSpec,
              "same-manifold wiring needs basis_in == basis_out");
      break;
    }
    case Wiring::CrossManifold: {
      require(spec.basis_in && spec.basis_out, ErrorKind::InvalidSpec, "cross-manifold model needs two bases");
      require(spec.basis_in->size() == spec.basis_out->size(), ErrorKind::InvalidSpec,
              "cross-manifold bases must have equal d_m (" + std::to_string(spec.basis_in->size()) + " vs " +
                  std::to_string(spec.basis_out->size()) + ")");
      require(transition >= 0 && transition < spec.layers, ErrorKind::InvalidSpec, "transition layer out of range");
      kinds[static_cast<std::size_t>(transition)] = LayerKind::Cross;
      break;
    }
    case Wiring::TemporalToManifold: {
      require(spec.basis_out != nullptr, ErrorKind::InvalidSpec, "temporal model needs an output basis");
      require(spec.n_t >= 1 && spec.d_t >= 1 && spec.d_t <= spec.n_t, ErrorKind::InvalidSpec,
              "temporal model needs 1 <= d_t <= n_t");
      require(spec.d_t % 2 == 1, ErrorKind::InvalidSpec,
              "d_t = " + std::to_string(spec.d_t) + " must be odd (constant plus cos/sin pairs)");
      require(transition >= 0 && transition < spec.layers, ErrorKind::InvalidSpec, "transition layer out of range");
      m.time_basis = std::make_shared<const SpectralBasis>(fourier_basis(spec.n_t, spec.d_t));
      kinds[static_cast<std::size_t>(transition)] = LayerKind::TimeToSpaceTime;
      for (int i = transition + 1; i < spec.layers; ++i) kinds[static_cast<std::size_t>(i)] = LayerKind::SpaceTime;
      break;
    }
  }
  spec.transition = spec.wiring == Wiring::SameManifold ? -1 : transition;
  m.spec = spec;

  Layout lay(m);
  add_mlp(lay, m.p, "P", spec.d_a, spec.p_hidden, dv, spec.activation);
  bool on_output = false;
  for (int i = 0; i < spec.layers; ++i) {
    LLayer l;
    l.kind = kinds[static_cast<std::size_t>(i)];
    l.activation = i + 1 == spec.layers ? Activation::Identity : spec.activation;
    const std::string p = "L" + std::to_string(i);
    Eigen::Index dm = 0;
    switch (l.kind) {
      case LayerKind::Same:
        if (spec.wiring == Wiring::TemporalToManifold) {
          l.basis_in = l.basis_out = m.time_basis;
        } else {
          l.basis_in = l.basis_out = on_output ? spec.basis_out : spec.basis_in;
        }
        dm = l.basis_in->size();
        break;
      case LayerKind::Cross:
        l.basis_in = spec.basis_in;
        l.basis_out = spec.basis_out;
        dm = l.basis_in->size();
        on_output = true;
        break;
      case LayerKind::TimeToSpaceTime:
        l.basis_in = l.basis_out = spec.basis_out;
        l.time_basis = m.time_basis;
        dm = spec.basis_out->size();
        break;
      case LayerKind::SpaceTime:
        l.basis_in = l.basis_out = spec.basis_out;
        l.time_basis = m.time_basis;
        dm = spec.basis_out->size();
        break;
    }
    l.w = lay.add(p + ".W", dv, dv);
    l.b = lay.add(p + ".b", 1, dv);
    l.r = lay.add(p + ".R", dm, dv * dv);
    if (l.kind == LayerKind::SpaceTime) l.rt = lay.add(p + ".Rt", spec.d_t, dv * dv);
    m.layers.push_back(l);
  }
  add_mlp(lay, m.q, "Q", dv, spec.q_hidden, spec.d_u, spec.activation);
  m.theta.assign(lay.size(), 0.0);

  Rng rng(spec.seed);
  auto uniform_fill = [&](std::size_t slot, Eigen::Index fan_in) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    auto t = m.param(slot);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-a, a);
  };
  auto normal_fill = [&](std::size_t slot, double sd) {
    auto t = m.param(slot);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = sd * rng.normal();
  };
  for (const auto& d : m.p) uniform_fill(d.w, d.in);
  for (const auto& l : m.layers) {
    uniform_fill(l.w, dv);
    const double dm = static_cast<double>(m.slots[l.r].rows);
    normal_fill(l.r, 1.0 / (static_cast<double>(dv) * std::sqrt(dm)));
    if (l.rt != kNoSlot)
      normal_fill(l.rt, 1.0 / (static_cast<double>(dv) * std::sqrt(static_cast<double>(spec.d_t))));
  }
  for (const auto& d : m.q) uniform_fill(d.w, d.in);

  if (spec.wiring == Wiring::TemporalToManifold) {
    m.input_domain_id = spec.domain_in.empty() ? m.time_basis->domain_id() : spec.domain_in;
    m.output_domain_id = spec.domain_out.empty() ? spec.basis_out->domain_id() + "x" + m.time_basis->domain_id()
                                                 : spec.domain_out;
  } else {
    m.input_domain_id = spec.domain_in.empty() ? spec.basis_in->domain_id() : spec.domain_in;
    m.output_domain_id = spec.domain_out.empty() ? spec.basis_out->domain_id() : spec.domain_out;
  }
  return m;
}

NormModel rebind(const NormModel& model, BasisPtr basis_in, BasisPtr basis_out) {
  require(basis_in && basis_out, ErrorKind::InvalidSpec, "rebind needs two bases");
  const auto& spec = model.spec;
  if (spec.wiring != Wiring::TemporalToManifold) {
    require(basis_in->size() == spec.basis_in->size(), ErrorKind::InvalidSpec, "rebind must keep d_m of the input basis");
  }
  require(basis_out->size() == spec.basis_out->size(), ErrorKind::InvalidSpec, "rebind must keep d_m of the output basis");
  if (spec.wiring == Wiring::SameManifold)
    require(same_basis(basis_in, basis_out), ErrorKind::InvalidSpec, "same-manifold model needs one basis");

  NormModel m = model;
  m.spec.basis_in = basis_in;
  m.spec.basis_out = basis_out;
  bool on_output = false;
  for (auto& l : m.layers) {
    switch (l.kind) {
      case LayerKind::Same:
        if (spec.wiring != Wiring::TemporalToManifold) l.basis_in = l.basis_out = on_output ? basis_out : basis_in;
        break;
      case LayerKind::Cross:
        l.basis_in = basis_in;
        l.basis_out = basis_out;
        on_output = true;
        break;
      case LayerKind::TimeToSpaceTime:
      case LayerKind::SpaceTime:
        l.basis_in = l.basis_out = basis_out;
        break;
    }
  }
  m.spec.domain_in.clear();
  m.spec.domain_out.clear();
  if (spec.wiring == Wiring::TemporalToManifold) {
    m.output_domain_id = basis_out->domain_id() + "x" + m.time_basis->domain_id();
  } else {
    m.input_domain_id = basis_in->domain_id();
    m.output_domain_id = basis_out->domain_id();
  }
  return m;
}

LLayerParams layer_params(const NormModel& model, std::size_t index) {
  const auto& l = model.layers.at(index);
  LLayerParams p;
  p.kind = l.kind;
  p.activation = l.activation;
  p.W = model.param(l.w);
  p.b = model.param(l.b).row(0).transpose();
  p.R = model.param(l.r);
  if (l.rt != kNoSlot) p.Rt = model.param(l.rt);
  p.basis_in = l.basis_in;
  p.basis_out = l.basis_out;
  p.time_basis = l.time_basis;
  return p;
}

}  // namespace norm
