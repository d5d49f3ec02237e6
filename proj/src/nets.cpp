#include "freecsl/nets.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace freecsl {

std::vector<LayerSpec> ModelSpec::encoder_layers(int view) const {
  std::vector<LayerSpec> layers;
  Index in = view_dims.at(view);
  for (Index h : encoder_hidden) {
    layers.push_back({in, h, Activation::kRelu});
    in = h;
  }
  layers.push_back({in, latent_dim, Activation::kNone});
  return layers;
}

std::vector<LayerSpec> ModelSpec::decoder_layers(int view) const {
  std::vector<LayerSpec> layers;
  Index in = latent_dim;
  for (auto it = encoder_hidden.rbegin(); it != encoder_hidden.rend(); ++it) {
    layers.push_back({in, *it, Activation::kRelu});
    in = *it;
  }
  layers.push_back({in, view_dims.at(view), Activation::kNone});
  return layers;
}

void ModelSpec::validate() const {
  if (view_dims.empty()) throw ConfigError("model spec needs at least one view");
  for (Index d : view_dims)
    if (d < 1) throw ConfigError("view dimensions must be positive");
  if (latent_dim < 1 || gcn_hidden < 1) throw ConfigError("hidden dims must be positive");
  for (Index h : encoder_hidden)
    if (h < 1) throw ConfigError("hidden dims must be positive");
  if (n_clusters < 1) throw ConfigError("n_clusters must be positive");
}

std::size_t ModelState::enc_offset(int view) const {
  const std::size_t per_view = 4 * std::size_t(n_encoder_layers());  // enc W/b + dec W/b
  return std::size_t(view) * per_view;
}

std::size_t ModelState::dec_offset(int view) const {
  return enc_offset(view) + 2 * std::size_t(n_encoder_layers());
}

std::size_t ModelState::head_offset() const {
  return enc_offset(spec_.n_views());
}

std::size_t ModelState::gcn_offset(int view) const {
  return head_offset() + 2 + 4 * std::size_t(view);
}

std::size_t ModelState::classifier_offset() const {
  return gcn_offset(spec_.n_views());
}

Index ModelState::n_scalars() const {
  Index total = 0;
  for (const Matrix& p : params_) total += p.size();
  return total;
}

ModelState init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelState state;
  state.spec_ = spec;
  Rng rng(seed);

  auto uniform_matrix = [&](Index rows, Index cols) {
    const double limit = std::sqrt(6.0 / double(rows));  // fan-in bound
    Matrix w(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) w(i, j) = rng.uniform(-limit, limit);
    return w;
  };
  auto push_affine = [&](const LayerSpec& layer) {
    state.params_.push_back(uniform_matrix(layer.in_dim, layer.out_dim));
    state.params_.push_back(Matrix::Zero(1, layer.out_dim));
  };

  for (int v = 0; v < spec.n_views(); ++v) {
    for (const LayerSpec& layer : spec.encoder_layers(v)) push_affine(layer);
    for (const LayerSpec& layer : spec.decoder_layers(v)) push_affine(layer);
  }
  push_affine({spec.latent_dim, spec.latent_dim, Activation::kNone});  // head
  for (int v = 0; v < spec.n_views(); ++v) {
    state.params_.push_back(uniform_matrix(spec.latent_dim, spec.gcn_hidden));   // W1
    state.params_.push_back(uniform_matrix(spec.latent_dim, spec.gcn_hidden));   // Ws1
    state.params_.push_back(uniform_matrix(spec.gcn_hidden, spec.latent_dim));   // W2
    state.params_.push_back(uniform_matrix(spec.gcn_hidden, spec.latent_dim));   // Ws2
  }
  push_affine({spec.latent_dim, Index(spec.n_clusters), Activation::kSoftmax});  // classifier
  return state;
}

namespace {

void check_finite(const Matrix& p) {
  if (!p.allFinite()) throw TrainingError("non-finite parameter tensor");
}

Matrix mlp_forward(const Matrix& x, const ModelState& state, int view, bool encoder) {
  const int layers = state.n_encoder_layers();
  Matrix h = x;
  for (int l = 0; l < layers; ++l) {
    const Matrix& w = encoder ? state.enc_w(view, l) : state.dec_w(view, l);
    const Matrix& b = encoder ? state.enc_b(view, l) : state.dec_b(view, l);
    check_finite(w);
    check_finite(b);
    if (h.cols() != w.rows())
      throw ShapeError("layer input width " + std::to_string(h.cols()) +
                       " does not match weight rows " + std::to_string(w.rows()));
    h = (h * w).rowwise() + b.row(0);
    if (l + 1 < layers) h = h.cwiseMax(0.0);
  }
  return h;
}

}  // namespace

Matrix encode(const Matrix& x, int view, const ModelState& state) {
  return mlp_forward(x, state, view, true);
}

Matrix decode(const Matrix& z, int view, const ModelState& state) {
  return mlp_forward(z, state, view, false);
}

Matrix contrastive_head(const Matrix& z, const ModelState& state) {
  check_finite(state.head_w());
  check_finite(state.head_b());
  if (z.cols() != state.head_w().rows())
    throw ShapeError("contrastive_head: input width mismatch");
  Matrix h = (z * state.head_w()).rowwise() + state.head_b().row(0);
  const double uniform = 1.0 / std::sqrt(double(h.cols()));
  for (Index i = 0; i < h.rows(); ++i) {
    const double norm = h.row(i).norm();
    if (norm > 0.0)
      h.row(i) /= norm;
    else
      h.row(i).setConstant(uniform);
  }
  return h;
}

Matrix normalized_adjacency(const Matrix& adjacency) {
  const Index n = adjacency.rows();
  if (adjacency.cols() != n) throw ShapeError("adjacency must be square");
  for (Index i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw DataError("adjacency must have a zero diagonal");
    for (Index j = i + 1; j < n; ++j)
      if (adjacency(i, j) != adjacency(j, i))
        throw DataError("adjacency must be symmetric");
  }
  Vector inv_sqrt(n);
  for (Index i = 0; i < n; ++i) {
    const double deg = adjacency.row(i).sum();
    inv_sqrt(i) = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;  // isolated: skip term only
  }
  return inv_sqrt.asDiagonal() * adjacency * inv_sqrt.asDiagonal();
}

Matrix gcn_forward(const Matrix& z, const Matrix& adjacency, int view,
                   const ModelState& state) {
  if (z.rows() != adjacency.rows())
    throw ShapeError("gcn_forward: latent rows do not align with adjacency");
  const Matrix ahat = normalized_adjacency(adjacency);
  check_finite(state.gcn_w(view, 0));
  check_finite(state.gcn_ws(view, 0));
  check_finite(state.gcn_w(view, 1));
  check_finite(state.gcn_ws(view, 1));
  Matrix h = (ahat * (z * state.gcn_w(view, 0)) + z * state.gcn_ws(view, 0)).cwiseMax(0.0);
  return ahat * (h * state.gcn_w(view, 1)) + h * state.gcn_ws(view, 1);
}

// --- tape forwards -----------------------------------------------------------

int ParamBinding::node(std::size_t param_index) {
  int& id = node_of_[param_index];
  if (id < 0) id = tape_->param(state_->param(param_index));
  return id;
}

namespace {

int mlp_node(ParamBinding& pb, int x_node, int view, bool encoder) {
  ad::Tape& t = pb.tape();
  const ModelState& s = pb.state();
  const int layers = s.n_encoder_layers();
  const std::size_t base = encoder ? s.enc_offset(view) : s.dec_offset(view);
  int h = x_node;
  for (int l = 0; l < layers; ++l) {
    const int w = pb.node(base + 2 * std::size_t(l));
    const int b = pb.node(base + 2 * std::size_t(l) + 1);
    h = t.add_rowvec(t.matmul(h, w), b);
    if (l + 1 < layers) h = t.relu(h);
  }
  return h;
}

}  // namespace

int encode_node(ParamBinding& pb, int x_node, int view) {
  return mlp_node(pb, x_node, view, true);
}

int decode_node(ParamBinding& pb, int z_node, int view) {
  return mlp_node(pb, z_node, view, false);
}

int head_node(ParamBinding& pb, int z_node) {
  ad::Tape& t = pb.tape();
  const std::size_t base = pb.state().head_offset();
  const int affine = t.add_rowvec(t.matmul(z_node, pb.node(base)), pb.node(base + 1));
  return t.row_normalize(affine);
}

int gcn_node(ParamBinding& pb, int z_node, const Matrix& norm_adjacency, int view) {
  ad::Tape& t = pb.tape();
  const ModelState& s = pb.state();
  const std::size_t base = s.gcn_offset(view);
  const int ahat = t.constant(norm_adjacency);
  const int h1 = t.relu(t.add(t.matmul(ahat, t.matmul(z_node, pb.node(base))),
                              t.matmul(z_node, pb.node(base + 1))));
  return t.add(t.matmul(ahat, t.matmul(h1, pb.node(base + 2))),
               t.matmul(h1, pb.node(base + 3)));
}

GradientTape backward(ad::Tape& tape, int loss_node, const ParamBinding& binding) {
  tape.backward(loss_node);
  GradientTape out;
  out.loss = tape.scalar_value(loss_node);
  const ModelState& state = binding.state();
  out.grads.resize(state.n_params());
  for (std::size_t i = 0; i < state.n_params(); ++i) {
    const int id = binding.node_if_bound(i);
    if (id >= 0 && tape.grad(id).size() > 0)
      out.grads[i] = tape.grad(id);
    else
      out.grads[i] = Matrix::Zero(state.param(i).rows(), state.param(i).cols());
  }
  return out;
}

// --- checkpoint io -----------------------------------------------------------
//
// Layout (little-endian):
//   magic "FCSLCKPT" | u32 version | u32 V | u32 K | u64 latent | u64 gcn_hidden
//   u32 n_hidden | u64 hidden[...] | u64 view_dims[V]
//   u64 n_params | per param: u64 rows | u64 cols | doubles row-major

namespace {

constexpr char kMagic[8] = {'F', 'C', 'S', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated checkpoint");
  return v;
}

}  // namespace

void ModelState::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kVersion);
  write_pod<std::uint32_t>(out, std::uint32_t(spec_.n_views()));
  write_pod<std::uint32_t>(out, std::uint32_t(spec_.n_clusters));
  write_pod<std::uint64_t>(out, std::uint64_t(spec_.latent_dim));
  write_pod<std::uint64_t>(out, std::uint64_t(spec_.gcn_hidden));
  write_pod<std::uint32_t>(out, std::uint32_t(spec_.encoder_hidden.size()));
  for (Index h : spec_.encoder_hidden) write_pod<std::uint64_t>(out, std::uint64_t(h));
  for (Index d : spec_.view_dims) write_pod<std::uint64_t>(out, std::uint64_t(d));
  write_pod<std::uint64_t>(out, std::uint64_t(params_.size()));
  for (const Matrix& p : params_) {
    write_pod<std::uint64_t>(out, std::uint64_t(p.rows()));
    write_pod<std::uint64_t>(out, std::uint64_t(p.cols()));
    for (Index i = 0; i < p.rows(); ++i)
      for (Index j = 0; j < p.cols(); ++j) write_pod<double>(out, p(i, j));
  }
}

ModelState ModelState::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a checkpoint file: " + path);
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));

  ModelState state;
  const auto v = read_pod<std::uint32_t>(in);
  state.spec_.n_clusters = int(read_pod<std::uint32_t>(in));
  state.spec_.latent_dim = Index(read_pod<std::uint64_t>(in));
  state.spec_.gcn_hidden = Index(read_pod<std::uint64_t>(in));
  const auto n_hidden = read_pod<std::uint32_t>(in);
  state.spec_.encoder_hidden.clear();
  for (std::uint32_t i = 0; i < n_hidden; ++i)
    state.spec_.encoder_hidden.push_back(Index(read_pod<std::uint64_t>(in)));
  for (std::uint32_t i = 0; i < v; ++i)
    state.spec_.view_dims.push_back(Index(read_pod<std::uint64_t>(in)));

  const auto n_params = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < n_params; ++i) {
    const Index rows = Index(read_pod<std::uint64_t>(in));
    const Index cols = Index(read_pod<std::uint64_t>(in));
    Matrix p(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) p(r, c) = read_pod<double>(in);
    state.params_.push_back(std::move(p));
  }
  state.spec_.validate();
  return state;
}

}  // namespace freecsl
