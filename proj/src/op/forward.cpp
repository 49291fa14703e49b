#include <cmath>
#include <numbers>

#include "norm/error.hpp"
#include "norm/kernels/kernels.hpp"
#include "norm/op/model.hpp"

namespace norm {

using Index = Eigen::Index;

namespace {

std::size_t sz(Index i) { return static_cast<std::size_t>(i); }

// ---- activations ----

void activate(Activation act, const Matrix& z, Matrix& y) {
  y.resize(z.rows(), z.cols());
  const Index n = z.size();
  const double* zp = z.data();
  double* yp = y.data();
  switch (act) {
    case Activation::Identity:
      std::copy(zp, zp + n, yp);
      break;
    case Activation::ReLU:
      for (Index i = 0; i < n; ++i) yp[i] = zp[i] > 0.0 ? zp[i] : 0.0;
      break;
    case Activation::GELU:
      kernels::active().gelu(sz(n), zp, yp);
      break;
  }
}

// dz = dy * sigma'(z), in place on dy.
void activate_backward(Activation act, const Matrix& z, Matrix& dy) {
  const Index n = z.size();
  const double* zp = z.data();
  double* dp = dy.data();
  switch (act) {
    case Activation::Identity:
      break;
    case Activation::ReLU:
      for (Index i = 0; i < n; ++i) dp[i] = zp[i] > 0.0 ? dp[i] : 0.0;
      break;
    case Activation::GELU:
      kernels::active().gelu_backward(sz(n), zp, dp);
      break;
  }
}

// ---- per-mode channel mixing ----
// Buffers hold rows x groups x c values; row r uses R[r % period].

void mix_forward(const double* r, Index c, const double* in, Index rows, Index groups, Index period,
                 double* out) {
  const Index cc = c * c;
  for (Index row = 0; row < rows; ++row) {
    const double* rk = r + (row % period) * cc;
    for (Index g = 0; g < groups; ++g) {
      const double* x = in + (row * groups + g) * c;
      double* y = out + (row * groups + g) * c;
      for (Index l = 0; l < c; ++l) {
        const double* rkl = rk + l * c;
        double s = 0.0;
        for (Index j = 0; j < c; ++j) s += rkl[j] * x[j];
        y[l] = s;
      }
    }
  }
}

void mix_backward(const double* r, Index c, const double* in, const double* dout, Index rows, Index groups,
                  Index period, double* dr, double* din) {
  const Index cc = c * c;
  for (Index row = 0; row < rows; ++row) {
    const Index k = row % period;
    const double* rk = r + k * cc;
    double* drk = dr + k * cc;
    for (Index g = 0; g < groups; ++g) {
      const double* x = in + (row * groups + g) * c;
      const double* dy = dout + (row * groups + g) * c;
      double* dx = din + (row * groups + g) * c;
      std::fill(dx, dx + c, 0.0);
      for (Index l = 0; l < c; ++l) {
        const double d = dy[l];
        const double* rkl = rk + l * c;
        double* drkl = drk + l * c;
        for (Index j = 0; j < c; ++j) {
          drkl[j] += d * x[j];
          dx[j] += rkl[j] * d;
        }
      }
    }
  }
}

// ---- layer view shared by the model and standalone-layer paths ----

struct LayerView {
  LayerKind kind;
  Activation activation;
  const SpectralBasis* in;
  const SpectralBasis* out;
  const SpectralBasis* time;
  const double* w;
  const double* b;
  const double* r;
  const double* rt;
  Index c;
};

struct LayerGrad {
  double* w;
  double* b;
  double* r;
  double* rt;
};

struct SpectralCache {
  Matrix c1;  // input-side coefficients
  Matrix c2;  // SpaceTime: temporal coefficients after the spatial mix
};

// S = spectral part of the layer applied to V (packed, `batch` samples).
void spectral_forward(const LayerView& L, const Matrix& v, Index batch, SpectralCache& sc, Matrix& s) {
  const Index c = L.c;
  const Index w = batch * c;
  switch (L.kind) {
    case LayerKind::Same:
    case LayerKind::Cross: {
      const Index nin = L.in->nodes(), nout = L.out->nodes(), dm = L.in->size();
      sc.c1.resize(dm, w);
      gemm(Trans::No, sz(dm), sz(w), sz(nin), L.in->pinv().data(), sz(nin), v.data(), sz(w), sc.c1.data(), sz(w),
           false);
      Matrix mixed(dm, w);
      mix_forward(L.r, c, sc.c1.data(), dm, batch, dm, mixed.data());
      s.resize(nout, w);
      gemm(Trans::No, sz(nout), sz(w), sz(dm), L.out->modes().data(), sz(dm), mixed.data(), sz(w), s.data(), sz(w),
           false);
      break;
    }
    case LayerKind::SpaceTime: {
      const Index ny = L.in->nodes(), dm = L.in->size(), nt = L.time->nodes(), dt = L.time->size();
      Matrix& a = sc.c1;
      a.resize(nt * dm, w);
      for (Index t = 0; t < nt; ++t)
        gemm(Trans::No, sz(dm), sz(w), sz(ny), L.in->pinv().data(), sz(ny), v.data() + t * ny * w, sz(w),
             a.data() + t * dm * w, sz(w), false);
      Matrix am(nt * dm, w);
      mix_forward(L.r, c, a.data(), nt * dm, batch, dm, am.data());
      Matrix& ct = sc.c2;
      ct.resize(dt, dm * w);
      gemm(Trans::No, sz(dt), sz(dm * w), sz(nt), L.time->pinv().data(), sz(nt), am.data(), sz(dm * w), ct.data(),
           sz(dm * w), false);
      Matrix ctm(dt, dm * w);
      mix_forward(L.rt, c, ct.data(), dt, dm * batch, dt, ctm.data());
      Matrix d(nt * dm, w);
      gemm(Trans::No, sz(nt), sz(dm * w), sz(dt), L.time->modes().data(), sz(dt), ctm.data(), sz(dm * w), d.data(),
           sz(dm * w), false);
      s.resize(nt * ny, w);
      for (Index t = 0; t < nt; ++t)
        gemm(Trans::No, sz(ny), sz(w), sz(dm), L.out->modes().data(), sz(dm), d.data() + t * dm * w, sz(w),
             s.data() + t * ny * w, sz(w), false);
      break;
    }
    case LayerKind::TimeToSpaceTime: {
      const Index ny = L.out->nodes(), dm = L.out->size(), nt = L.time->nodes(), dt = L.time->size();
      Matrix& ct = sc.c1;
      ct.resize(dt, w);
      gemm(Trans::No, sz(dt), sz(w), sz(nt), L.time->pinv().data(), sz(nt), v.data(), sz(w), ct.data(), sz(w),
           false);
      // D[tau, (k, b), l] = sum_j R[k, l, j] C[tau, b, j]
      Matrix d(dt, dm * w);
      for (Index tau = 0; tau < dt; ++tau)
        for (Index k = 0; k < dm; ++k)
          mix_forward(L.r + k * c * c, c, ct.data() + tau * w, 1, batch, 1, d.data() + tau * dm * w + k * w);
      Matrix e(nt * dm, w);
      gemm(Trans::No, sz(nt), sz(dm * w), sz(dt), L.time->modes().data(), sz(dt), d.data(), sz(dm * w), e.data(),
           sz(dm * w), false);
      s.resize(nt * ny, w);
      for (Index t = 0; t < nt; ++t)
        gemm(Trans::No, sz(ny), sz(w), sz(dm), L.out->modes().data(), sz(dm), e.data() + t * dm * w, sz(w),
             s.data() + t * ny * w, sz(w), false);
      break;
    }
  }
}

// Adjoint of spectral_forward: dV from dS, accumulating dR (and dRt).
void spectral_backward(const LayerView& L, Index batch, const SpectralCache& sc, const Matrix& ds, LayerGrad& g,
                       Matrix& dv) {
  const Index c = L.c;
  const Index w = batch * c;
  switch (L.kind) {
    case LayerKind::Same:
    case LayerKind::Cross: {
      const Index nin = L.in->nodes(), nout = L.out->nodes(), dm = L.in->size();
      Matrix dmix(dm, w);
      gemm(Trans::Yes, sz(dm), sz(w), sz(nout), L.out->modes().data(), sz(dm), ds.data(), sz(w), dmix.data(), sz(w),
           false);
      Matrix dc(dm, w);
      mix_backward(L.r, c, sc.c1.data(), dmix.data(), dm, batch, dm, g.r, dc.data());
      dv.resize(nin, w);
      gemm(Trans::Yes, sz(nin), sz(w), sz(dm), L.in->pinv().data(), sz(nin), dc.data(), sz(w), dv.data(), sz(w),
           false);
      break;
    }
    case LayerKind::SpaceTime: {
      const Index ny = L.in->nodes(), dm = L.in->size(), nt = L.time->nodes(), dt = L.time->size();
      Matrix dd(nt * dm, w);
      for (Index t = 0; t < nt; ++t)
        gemm(Trans::Yes, sz(dm), sz(w), sz(ny), L.out->modes().data(), sz(dm), ds.data() + t * ny * w, sz(w),
             dd.data() + t * dm * w, sz(w), false);
      Matrix dctm(dt, dm * w);
      gemm(Trans::Yes, sz(dt), sz(dm * w), sz(nt), L.time->modes().data(), sz(dt), dd.data(), sz(dm * w),
           dctm.data(), sz(dm * w), false);
      Matrix dct(dt, dm * w);
      mix_backward(L.rt, c, sc.c2.data(), dctm.data(), dt, dm * batch, dt, g.rt, dct.data());
      Matrix dam(nt * dm, w);
      gemm(Trans::Yes, sz(nt), sz(dm * w), sz(dt), L.time->pinv().data(), sz(nt), dct.data(), sz(dm * w),
           dam.data(), sz(dm * w), false);
      Matrix da(nt * dm, w);
      mix_backward(L.r, c, sc.c1.data(), dam.data(), nt * dm, batch, dm, g.r, da.data());
      dv.resize(nt * ny, w);
      for (Index t = 0; t < nt; ++t)
        gemm(Trans::Yes, sz(ny), sz(w), sz(dm), L.in->pinv().data(), sz(ny), da.data() + t * dm * w, sz(w),
             dv.data() + t * ny * w, sz(w), false);
      break;
    }
    case LayerKind::TimeToSpaceTime: {
      const Index ny = L.out->nodes(), dm = L.out->size(), nt = L.time->nodes(), dt = L.time->size();
      Matrix de(nt * dm, w);
      for (Index t = 0; t < nt; ++t)
        gemm(Trans::Yes, sz(dm), sz(w), sz(ny), L.out->modes().data(), sz(dm), ds.data() + t * ny * w, sz(w),
             de.data() + t * dm * w, sz(w), false);
      Matrix dd(dt, dm * w);
      gemm(Trans::Yes, sz(dt), sz(dm * w), sz(nt), L.time->modes().data(), sz(dt), de.data(), sz(dm * w),
           dd.data(), sz(dm * w), false);
      Matrix dct = Matrix::Zero(dt, w);
      Matrix part(1, w);
      for (Index tau = 0; tau < dt; ++tau)
        for (Index k = 0; k < dm; ++k) {
          mix_backward(L.r + k * c * c, c, sc.c1.data() + tau * w, dd.data() + tau * dm * w + k * w, 1, batch, 1,
                       g.r + k * c * c, part.data());
          dct.row(tau) += part.row(0);
        }
      dv.resize(nt, w);
      gemm(Trans::Yes, sz(nt), sz(w), sz(dt), L.time->pinv().data(), sz(nt), dct.data(), sz(w), dv.data(), sz(w),
           false);
      break;
    }
  }
}

bool skip_before_spectral(LayerKind k) { return k == LayerKind::Same || k == LayerKind::SpaceTime; }

struct LayerCache {
  Matrix v;  // layer input
  SpectralCache sc;
  Matrix s;  // spectral output (Cross, TimeToSpaceTime)
  Matrix z;  // pre-activation
};

// Z = V W + 1 b^T + S   (Same, SpaceTime)
// Z = S W + 1 b^T       (Cross, TimeToSpaceTime)
void layer_forward(const LayerView& L, Index batch, LayerCache& lc, Matrix& y) {
  const Index c = L.c;
  Matrix s;
  spectral_forward(L, lc.v, batch, lc.sc, s);
  const Index rows = s.rows() * batch;  // pointwise rows (node, sample)
  const auto& kt = kernels::active();
  if (skip_before_spectral(L.kind)) {
    lc.z = std::move(s);
    gemm(Trans::No, sz(rows), sz(c), sz(c), lc.v.data(), sz(c), L.w, sz(c), lc.z.data(), sz(c), true);
  } else {
    lc.z.resize(s.rows(), s.cols());
    gemm(Trans::No, sz(rows), sz(c), sz(c), s.data(), sz(c), L.w, sz(c), lc.z.data(), sz(c), false);
    lc.s = std::move(s);
  }
  kt.add_row_bias(sz(rows), sz(c), L.b, lc.z.data(), sz(c));
  activate(L.activation, lc.z, y);
}

// dy becomes dz in place; returns dV.
void layer_backward(const LayerView& L, Index batch, LayerCache& lc, Matrix& dy, LayerGrad& g, Matrix& dv) {
  const Index c = L.c;
  activate_backward(L.activation, lc.z, dy);
  const Index rows = dy.rows() * batch;
  const auto& kt = kernels::active();
  kt.col_sum(sz(rows), sz(c), dy.data(), sz(c), g.b);
  Matrix wt(c, c);
  for (Index i = 0; i < c; ++i)
    for (Index j = 0; j < c; ++j) wt(j, i) = L.w[i * c + j];
  if (skip_before_spectral(L.kind)) {
    gemm(Trans::Yes, sz(c), sz(c), sz(rows), lc.v.data(), sz(c), dy.data(), sz(c), g.w, sz(c), true);
    spectral_backward(L, batch, lc.sc, dy, g, dv);
    const Index vrows = lc.v.rows() * batch;
    gemm(Trans::No, sz(vrows), sz(c), sz(c), dy.data(), sz(c), wt.data(), sz(c), dv.data(), sz(c), true);
  } else {
    gemm(Trans::Yes, sz(c), sz(c), sz(rows), lc.s.data(), sz(c), dy.data(), sz(c), g.w, sz(c), true);
    Matrix ds(dy.rows(), dy.cols());
    gemm(Trans::No, sz(rows), sz(c), sz(c), dy.data(), sz(c), wt.data(), sz(c), ds.data(), sz(c), false);
    spectral_backward(L, batch, lc.sc, ds, g, dv);
  }
}

// ---- pointwise dense layers ----

struct DenseCache {
  Matrix x;
  Matrix z;
};

void dense_forward(const NormModel& m, const DenseRef& d, Index batch, DenseCache& dc, Matrix& y) {
  const Index rows = dc.x.rows() * batch;
  dc.z.resize(dc.x.rows(), batch * d.out);
  gemm(Trans::No, sz(rows), sz(d.out), sz(d.in), dc.x.data(), sz(d.in), m.param(d.w).data(), sz(d.out),
       dc.z.data(), sz(d.out), false);
  kernels::active().add_row_bias(sz(rows), sz(d.out), m.param(d.b).data(), dc.z.data(), sz(d.out));
  activate(d.activation, dc.z, y);
}

void dense_backward(const NormModel& m, const DenseRef& d, Index batch, DenseCache& dc, Matrix& dy,
                    std::span<double> grad, Matrix* dx) {
  activate_backward(d.activation, dc.z, dy);
  const Index rows = dc.x.rows() * batch;
  const auto& kt = kernels::active();
  kt.col_sum(sz(rows), sz(d.out), dy.data(), sz(d.out), grad.data() + m.slots[d.b].offset);
  gemm(Trans::Yes, sz(d.in), sz(d.out), sz(rows), dc.x.data(), sz(d.in), dy.data(), sz(d.out),
       grad.data() + m.slots[d.w].offset, sz(d.out), true);
  if (dx) {
    const Matrix wt = m.param(d.w).transpose();
    dx->resize(dc.x.rows(), batch * d.in);
    gemm(Trans::No, sz(rows), sz(d.in), sz(d.out), dy.data(), sz(d.out), wt.data(), sz(d.in), dx->data(),
         sz(d.in), false);
  }
}

LayerView view_of(const NormModel& m, const LLayer& l) {
  LayerView v;
  v.kind = l.kind;
  v.activation = l.activation;
  v.in = l.basis_in.get();
  v.out = l.basis_out.get();
  v.time = l.time_basis.get();
  v.w = m.param(l.w).data();
  v.b = m.param(l.b).data();
  v.r = m.param(l.r).data();
  v.rt = l.rt == kNoSlot ? nullptr : m.param(l.rt).data();
  v.c = m.spec.d_v;
  return v;
}

LayerView view_of(const LLayerParams& p) {
  const Index c = p.W.rows();
  require(p.W.cols() == c && p.b.size() == c && p.R.cols() == c * c, ErrorKind::DimensionMismatch,
          "layer parameter shapes disagree with d_v");
  require(p.basis_in && p.basis_out, ErrorKind::DimensionMismatch, "layer needs bases");
  LayerView v;
  v.kind = p.kind;
  v.activation = p.activation;
  v.in = p.basis_in.get();
  v.out = p.basis_out.get();
  v.time = p.time_basis.get();
  v.w = p.W.data();
  v.b = p.b.data();
  v.r = p.R.data();
  v.rt = p.Rt.size() ? p.Rt.data() : nullptr;
  v.c = c;
  const Index dm = p.kind == LayerKind::TimeToSpaceTime ? p.basis_out->size() : p.basis_in->size();
  require(p.R.rows() == dm, ErrorKind::DimensionMismatch, "R has " + std::to_string(p.R.rows()) +
                                                              " modes, basis " + std::to_string(dm));
  if (p.kind == LayerKind::Cross)
    require(p.basis_out->size() == dm, ErrorKind::DimensionMismatch, "cross layer needs equal d_m");
  if (p.kind == LayerKind::SpaceTime || p.kind == LayerKind::TimeToSpaceTime)
    require(p.time_basis != nullptr, ErrorKind::DimensionMismatch, "space-time layer needs a time basis");
  if (p.kind == LayerKind::SpaceTime)
    require(p.Rt.rows() == p.time_basis->size() && p.Rt.cols() == c * c, ErrorKind::DimensionMismatch,
            "Rt shape mismatch");
  return v;
}

Index layer_input_rows(const LayerView& v) {
  switch (v.kind) {
    case LayerKind::Same:
    case LayerKind::Cross: return v.in->nodes();
    case LayerKind::SpaceTime: return v.in->nodes() * v.time->nodes();
    case LayerKind::TimeToSpaceTime: return v.time->nodes();
  }
  return 0;
}

}  // namespace

struct BatchCache {
  Index batch = 0;
  std::vector<DenseCache> p, q;
  std::vector<LayerCache> layers;
};

BatchWorkspace::BatchWorkspace() : cache_(std::make_unique<BatchCache>()) {}
BatchWorkspace::~BatchWorkspace() = default;
BatchWorkspace::BatchWorkspace(BatchWorkspace&&) noexcept = default;
BatchWorkspace& BatchWorkspace::operator=(BatchWorkspace&&) noexcept = default;

Matrix forward_batch(const NormModel& m, const Matrix& a, Index batch, BatchWorkspace* ws) {
  require(batch >= 1, ErrorKind::EmptyBatch, "empty batch");
  require(a.rows() == m.input_nodes() && a.cols() == batch * m.spec.d_a, ErrorKind::DimensionMismatch,
          "input is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ", model expects " +
              std::to_string(m.input_nodes()) + "x" + std::to_string(batch * m.spec.d_a));
  BatchCache local;
  BatchCache& bc = ws ? ws->cache() : local;
  bc.batch = batch;
  bc.p.resize(m.p.size());
  bc.q.resize(m.q.size());
  bc.layers.resize(m.layers.size());

  Matrix cur = a;
  for (std::size_t i = 0; i < m.p.size(); ++i) {
    bc.p[i].x = std::move(cur);
    dense_forward(m, m.p[i], batch, bc.p[i], cur);
  }
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    bc.layers[i].v = std::move(cur);
    layer_forward(view_of(m, m.layers[i]), batch, bc.layers[i], cur);
  }
  for (std::size_t i = 0; i < m.q.size(); ++i) {
    bc.q[i].x = std::move(cur);
    dense_forward(m, m.q[i], batch, bc.q[i], cur);
  }
  return cur;
}

void backward_batch(const NormModel& m, BatchWorkspace& ws, const Matrix& g, std::span<double> grad,
                    Matrix* grad_input) {
  BatchCache& bc = ws.cache();
  const Index batch = bc.batch;
  require(grad.size() == m.param_count(), ErrorKind::ShapeMismatch, "gradient buffer has the wrong size");
  require(g.rows() == m.output_nodes() && g.cols() == batch * m.spec.d_u, ErrorKind::DimensionMismatch,
          "output gradient has the wrong shape");
  Matrix dy = g;
  Matrix dx;
  for (std::size_t i = m.q.size(); i-- > 0;) {
    dense_backward(m, m.q[i], batch, bc.q[i], dy, grad, &dx);
    dy.swap(dx);
  }
  for (std::size_t i = m.layers.size(); i-- > 0;) {
    const auto& l = m.layers[i];
    LayerGrad lg{grad.data() + m.slots[l.w].offset, grad.data() + m.slots[l.b].offset,
                 grad.data() + m.slots[l.r].offset,
                 l.rt == kNoSlot ? nullptr : grad.data() + m.slots[l.rt].offset};
    layer_backward(view_of(m, l), batch, bc.layers[i], dy, lg, dx);
    dy.swap(dx);
  }
  for (std::size_t i = m.p.size(); i-- > 0;) {
    const bool need = i > 0 || grad_input != nullptr;
    dense_backward(m, m.p[i], batch, bc.p[i], dy, grad, need ? &dx : nullptr);
    if (need) dy.swap(dx);
  }
  if (grad_input) *grad_input = std::move(dy);
}

Matrix pack_samples(const std::vector<const Matrix*>& samples) {
  require(!samples.empty(), ErrorKind::EmptyBatch, "no samples to pack");
  const Index n = samples.front()->rows(), c = samples.front()->cols();
  const Index b = static_cast<Index>(samples.size());
  Matrix out(n, b * c);
  for (Index s = 0; s < b; ++s) {
    const Matrix& x = *samples[sz(s)];
    require(x.rows() == n && x.cols() == c, ErrorKind::DimensionMismatch, "samples differ in shape");
    out.middleCols(s * c, c) = x;
  }
  return out;
}

Matrix unpack_sample(const Matrix& packed, Index batch, Index index) {
  const Index c = packed.cols() / batch;
  return packed.middleCols(index * c, c);
}

namespace {

void check_domain(const std::string& model_id, const Field& f, const char* what) {
  if (!model_id.empty() && !f.domain_id.empty() && model_id != f.domain_id)
    fail(ErrorKind::DomainMismatch, std::string(what) + " field lives on domain " + f.domain_id.substr(0, 12) +
                                        ", model expects " + model_id.substr(0, 12));
}

}  // namespace

Field forward(const NormModel& m, const Field& a) {
  check_domain(m.input_domain_id, a, "input");
  require(a.channels() == m.spec.d_a, ErrorKind::DimensionMismatch, "input has the wrong channel count");
  Field out(forward_batch(m, a.values, 1), m.output_domain_id);
  return out;
}

Gradients backward(const NormModel& m, const Field& a, const Field& g) {
  check_domain(m.input_domain_id, a, "input");
  check_domain(m.output_domain_id, g, "gradient");
  BatchWorkspace ws;
  forward_batch(m, a.values, 1, &ws);
  Gradients out;
  out.params.assign(m.param_count(), 0.0);
  backward_batch(m, ws, g.values, out.params, &out.input);
  return out;
}

Field spectral_block(const LLayerParams& layer, const Field& v) {
  const LayerView lv = view_of(layer);
  require(v.nodes() == layer_input_rows(lv) && v.channels() == lv.c, ErrorKind::DimensionMismatch,
          "field shape does not match the layer");
  SpectralCache sc;
  Matrix s;
  spectral_forward(lv, v.values, 1, sc, s);
  return Field(std::move(s), layer.basis_out->domain_id());
}

Field l_layer_forward(const LLayerParams& layer, const Field& v) {
  const LayerView lv = view_of(layer);
  require(v.nodes() == layer_input_rows(lv) && v.channels() == lv.c, ErrorKind::DimensionMismatch,
          "field shape does not match the layer");
  LayerCache lc;
  lc.v = v.values;
  Matrix y;
  layer_forward(lv, 1, lc, y);
  return Field(std::move(y), layer.basis_out->domain_id());
}

}  // namespace norm
