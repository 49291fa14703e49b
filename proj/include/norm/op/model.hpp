#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "norm/field.hpp"
#include "norm/linalg.hpp"
#include "norm/spectral/basis.hpp"

namespace norm {

enum class Activation { GELU, ReLU, Identity };
enum class Wiring { SameManifold, CrossManifold, TemporalToManifold };

// Same: X->X. Cross: X->Y with skip applied after decoding.
// TimeToSpaceTime: F->YxF, encodes over time and decodes with LBO(Y) x Fourier.
// SpaceTime: YxF->YxF, spatial mix followed by temporal mix.
enum class LayerKind { Same, Cross, TimeToSpaceTime, SpaceTime };

const char* to_string(Activation a);
const char* to_string(Wiring w);
const char* to_string(LayerKind k);
Activation parse_activation(const std::string& s);
Wiring parse_wiring(const std::string& s);

struct ArchSpec {
  Wiring wiring = Wiring::SameManifold;
  Eigen::Index d_a = 1;
  Eigen::Index d_u = 1;
  Eigen::Index d_v = 32;
  int layers = 4;
  Activation activation = Activation::GELU;
  Eigen::Index p_hidden = 0;    // 0: affine lifting
  Eigen::Index q_hidden = 128;  // 0: affine projection
  // CrossManifold: index of the X->Y layer (-1: layers / 2).
  // TemporalToManifold: index of the F->YxF layer (-1: layers / 2).
  int transition = -1;
  // TemporalToManifold: time nodes and Fourier mode count (must be odd).
  Eigen::Index n_t = 0;
  Eigen::Index d_t = 0;
  std::uint64_t seed = 0;

  BasisPtr basis_in;   // spatial basis of the input manifold (unused for TemporalToManifold)
  BasisPtr basis_out;  // spatial basis of the output manifold

  // Field domain ids the model accepts and produces. Empty: taken from the
  // bases (POD bases carry a snapshot hash, so callers set these).
  std::string domain_in, domain_out;
};

struct ParamSlot {
  std::string name;
  std::size_t offset;
  Eigen::Index rows, cols;
  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

struct DenseRef {
  std::size_t w, b;  // slot indices; W is in x out, b is 1 x out
  Eigen::Index in, out;
  Activation activation;
};

inline constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();

// One L-layer. R (and Rt) are stored as d_m x (d_v * d_v), entry
// R(k, l * d_v + j) = R_{k,l,j}.
struct LLayer {
  LayerKind kind;
  Activation activation;
  BasisPtr basis_in, basis_out;
  BasisPtr time_basis;  // TimeToSpaceTime and SpaceTime
  std::size_t w = kNoSlot, b = kNoSlot, r = kNoSlot, rt = kNoSlot;
};

// Parameters live in one flat vector in declaration order (P, layers, Q);
// slots give each tensor's position and shape.
class NormModel {
 public:
  ArchSpec spec;
  std::vector<ParamSlot> slots;
  std::vector<double> theta;
  std::vector<DenseRef> p, q;
  std::vector<LLayer> layers;
  BasisPtr time_basis;
  std::string input_domain_id, output_domain_id;

  std::size_t param_count() const { return theta.size(); }

  using MapC = Eigen::Map<const Matrix>;
  using Map = Eigen::Map<Matrix>;
  MapC param(std::size_t slot) const {
    const auto& s = slots.at(slot);
    return MapC(theta.data() + s.offset, s.rows, s.cols);
  }
  Map param(std::size_t slot) {
    const auto& s = slots.at(slot);
    return Map(theta.data() + s.offset, s.rows, s.cols);
  }
  std::size_t slot_index(const std::string& name) const;

  // Rows of the input/output field for one sample.
  Eigen::Index input_nodes() const;
  Eigen::Index output_nodes() const;
};

// Validates the spec, lays out the parameters and initialises them:
// W, P, Q ~ U(+-1/sqrt(fan_in)), biases 0, R ~ N(0, sd = 1/(d_v sqrt(d_m))).
NormModel build_model(const ArchSpec& spec);

// Replaces the spatial bases (same mode counts) and domain ids; parameters
// are untouched.
NormModel rebind(const NormModel& model, BasisPtr basis_in, BasisPtr basis_out);

// Standalone layer for direct use and tests: parameters held by value.
struct LLayerParams {
  LayerKind kind = LayerKind::Same;
  Activation activation = Activation::GELU;
  Matrix W;  // d_v x d_v
  Vector b;  // d_v
  Matrix R;  // d_m x (d_v * d_v)
  Matrix Rt;  // d_t x (d_v * d_v), SpaceTime only
  BasisPtr basis_in, basis_out, time_basis;
};

// Phi_out * mix with mix_{k,l} = sum_j R_{k,l,j} (Phi_in^dagger V)_{k,j}.
Field spectral_block(const LLayerParams& layer, const Field& v);
Field l_layer_forward(const LLayerParams& layer, const Field& v);
LLayerParams layer_params(const NormModel& model, std::size_t index);

Field forward(const NormModel& model, const Field& a);

struct Gradients {
  std::vector<double> params;  // matches NormModel::theta
  Matrix input;                // d loss / d A
};

// Reverse-mode gradient of <G, forward(A)>.
Gradients backward(const NormModel& model, const Field& a, const Field& g);

// ---- Batched evaluation (training path) ----
// B samples packed node-major: row = node, column = sample * channels + channel.

struct BatchCache;

class BatchWorkspace {
 public:
  BatchWorkspace();
  ~BatchWorkspace();
  BatchWorkspace(BatchWorkspace&&) noexcept;
  BatchWorkspace& operator=(BatchWorkspace&&) noexcept;
  BatchCache& cache() { return *cache_; }

 private:
  std::unique_ptr<BatchCache> cache_;
};

// Output is output_nodes x (batch * d_u). With ws set, intermediates are kept
// for backward_batch.
Matrix forward_batch(const NormModel& model, const Matrix& a, Eigen::Index batch, BatchWorkspace* ws = nullptr);

// Adds the parameter gradient of <G, out> to grad (size param_count); writes
// the input gradient when grad_input is non-null.
void backward_batch(const NormModel& model, BatchWorkspace& ws, const Matrix& g, std::span<double> grad,
                    Matrix* grad_input = nullptr);

Matrix pack_samples(const std::vector<const Matrix*>& samples);
Matrix unpack_sample(const Matrix& packed, Eigen::Index batch, Eigen::Index index);

// ---- Checkpoints ----
// Directory with model.json, params.bin (NORMCK1) and the referenced bases.
void save_checkpoint(const NormModel& model, const std::filesystem::path& dir,
                     const std::string& extra_json = "{}");
NormModel load_checkpoint(const std::filesystem::path& dir);
// The "extra" object stored by save_checkpoint (normalizer, config).
std::string checkpoint_extra(const std::filesystem::path& dir);

}  // namespace norm
