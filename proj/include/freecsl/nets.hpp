// nets.hpp - parameterized forward computations: per-view encoder/decoder
// MLPs, the shared contrastive head, per-view GCN layers with a shared
// classifier, plus initialization, serialization, and the gradient contract.
#pragma once

#include <string>
#include <vector>

#include "freecsl/autodiff.hpp"
#include "freecsl/common.hpp"

namespace freecsl {

enum class Activation { kRelu, kNone, kSoftmax };

struct LayerSpec {
  Index in_dim = 0;
  Index out_dim = 0;
  Activation activation = Activation::kNone;
};

struct ModelSpec {
  std::vector<Index> view_dims;                    // D_v per view
  int n_clusters = 0;                              // K
  Index latent_dim = 64;                           // d
  std::vector<Index> encoder_hidden = {500, 500, 2000};
  Index gcn_hidden = 128;

  int n_views() const { return static_cast<int>(view_dims.size()); }

  // D_v -> hidden... -> d, relu on hidden layers, linear output
  std::vector<LayerSpec> encoder_layers(int view) const;
  // d -> reversed hidden... -> D_v, relu on hidden layers, linear output
  std::vector<LayerSpec> decoder_layers(int view) const;

  void validate() const;
};

// All trainable tensors, stored in one flat vector with a fixed layout so
// optimizers, gradients, and checkpoints index parameters identically:
//   per view v: encoder W/b per layer, then decoder W/b per layer
//   head W, head b
//   per view v: gcn W1, Ws1, W2, Ws2
//   classifier W, classifier b
class ModelState {
 public:
  ModelState() = default;

  const ModelSpec& spec() const { return spec_; }
  std::size_t n_params() const { return params_.size(); }
  Matrix& param(std::size_t i) { return params_[i]; }
  const Matrix& param(std::size_t i) const { return params_[i]; }
  Index n_scalars() const;

  Matrix& enc_w(int view, int layer) { return params_[enc_offset(view) + 2 * layer]; }
  Matrix& enc_b(int view, int layer) { return params_[enc_offset(view) + 2 * layer + 1]; }
  Matrix& dec_w(int view, int layer) { return params_[dec_offset(view) + 2 * layer]; }
  Matrix& dec_b(int view, int layer) { return params_[dec_offset(view) + 2 * layer + 1]; }
  Matrix& head_w() { return params_[head_offset()]; }
  Matrix& head_b() { return params_[head_offset() + 1]; }
  Matrix& gcn_w(int view, int layer) { return params_[gcn_offset(view) + 2 * layer]; }
  Matrix& gcn_ws(int view, int layer) { return params_[gcn_offset(view) + 2 * layer + 1]; }
  Matrix& classifier_w() { return params_[classifier_offset()]; }
  Matrix& classifier_b() { return params_[classifier_offset() + 1]; }

  const Matrix& enc_w(int view, int layer) const { return params_[enc_offset(view) + 2 * layer]; }
  const Matrix& enc_b(int view, int layer) const { return params_[enc_offset(view) + 2 * layer + 1]; }
  const Matrix& dec_w(int view, int layer) const { return params_[dec_offset(view) + 2 * layer]; }
  const Matrix& dec_b(int view, int layer) const { return params_[dec_offset(view) + 2 * layer + 1]; }
  const Matrix& head_w() const { return params_[head_offset()]; }
  const Matrix& head_b() const { return params_[head_offset() + 1]; }
  const Matrix& gcn_w(int view, int layer) const { return params_[gcn_offset(view) + 2 * layer]; }
  const Matrix& gcn_ws(int view, int layer) const { return params_[gcn_offset(view) + 2 * layer + 1]; }
  const Matrix& classifier_w() const { return params_[classifier_offset()]; }
  const Matrix& classifier_b() const { return params_[classifier_offset() + 1]; }

  std::size_t enc_offset(int view) const;
  std::size_t dec_offset(int view) const;
  std::size_t head_offset() const;
  std::size_t gcn_offset(int view) const;
  std::size_t classifier_offset() const;
  int n_encoder_layers() const {
    return static_cast<int>(spec_.encoder_hidden.size()) + 1;
  }

  void save(const std::string& path) const;
  static ModelState load(const std::string& path);

  friend ModelState init_params(const ModelSpec& spec, std::uint64_t seed);

 private:
  ModelSpec spec_;
  std::vector<Matrix> params_;
};

// Weights drawn from U(-sqrt(6/fan_in), sqrt(6/fan_in)), biases zero.
// Deterministic given the seed.
ModelState init_params(const ModelSpec& spec, std::uint64_t seed);

// --- plain forwards (no gradient tracking) ----------------------------------

Matrix encode(const Matrix& x, int view, const ModelState& state);
Matrix decode(const Matrix& z, int view, const ModelState& state);
// Rows L2-normalized; an exactly-zero row becomes the uniform unit vector.
Matrix contrastive_head(const Matrix& z, const ModelState& state);
// Two aggregation layers sigma(D^-1/2 A D^-1/2 Z W + Z Ws): relu after the
// first, identity after the second. Isolated nodes see only the skip term.
Matrix gcn_forward(const Matrix& z, const Matrix& adjacency, int view,
                   const ModelState& state);

// Degree-normalized adjacency with zero rows for isolated nodes.
Matrix normalized_adjacency(const Matrix& adjacency);

// --- tape forwards -----------------------------------------------------------

// Binds state parameters to tape nodes on demand, so each parameter appears
// at most once per tape and gradients accumulate across loss terms.
class ParamBinding {
 public:
  ParamBinding(ad::Tape& tape, const ModelState& state)
      : tape_(&tape), state_(&state), node_of_(state.n_params(), -1) {}

  int node(std::size_t param_index);
  const ModelState& state() const { return *state_; }
  ad::Tape& tape() { return *tape_; }
  bool bound(std::size_t param_index) const { return node_of_[param_index] >= 0; }
  int node_if_bound(std::size_t param_index) const { return node_of_[param_index]; }

 private:
  ad::Tape* tape_;
  const ModelState* state_;
  std::vector<int> node_of_;
};

int encode_node(ParamBinding& pb, int x_node, int view);
int decode_node(ParamBinding& pb, int z_node, int view);
int head_node(ParamBinding& pb, int z_node);
int gcn_node(ParamBinding& pb, int z_node, const Matrix& norm_adjacency, int view);

// Loss value plus one gradient matrix per parameter slot (zeros for
// parameters the loss does not touch).
struct GradientTape {
  double loss = 0.0;
  std::vector<Matrix> grads;
};

// Runs reverse-mode accumulation from the given loss node and collects
// per-parameter gradients in the state's layout.
GradientTape backward(ad::Tape& tape, int loss_node, const ParamBinding& binding);

}  // namespace freecsl
