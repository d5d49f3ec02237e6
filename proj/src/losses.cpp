#include "freecsl/losses.hpp"

#include <algorithm>
#include <cmath>

namespace freecsl {

namespace {

// observed rows of a view, compacted in the order given by `instances`
Matrix gather_observed(const Matrix& view, const std::vector<Index>& instances) {
  Matrix out(instances.size(), view.cols());
  for (std::size_t r = 0; r < instances.size(); ++r) out.row(r) = view.row(instances[r]);
  return out;
}

std::vector<Index> batch_observed(const BoolMatrix& mask, const std::vector<Index>& batch,
                                  int view) {
  std::vector<Index> out;
  for (Index i : batch)
    if (mask(i, view)) out.push_back(i);
  return out;
}

const double kLogFloorLn = std::log(kLogFloor);

}  // namespace

GraphSet build_graphs(const MultiViewDataset& dataset, int zeta) {
  GraphSet gs;
  for (int v = 0; v < dataset.n_views(); ++v) {
    gs.nodes.push_back(observed_rows(dataset.mask, v));
    const Matrix x = gather_observed(dataset.views[v], gs.nodes.back());
    gs.graphs.push_back(knn_adjacency(x, zeta));
    gs.norm_adjacency.push_back(normalized_adjacency(gs.graphs.back().adjacency));
  }
  return gs;
}

EpochArtifacts build_epoch_artifacts(const ModelState& state,
                                     const MultiViewDataset& dataset,
                                     std::uint64_t seed, const CseConfig& cse) {
  EpochArtifacts art;
  const int k = dataset.n_clusters;
  const FusionWeights weights = completeness_weights(dataset.mask);

  std::vector<Matrix> latent_full;
  std::vector<Matrix> semantic;  // compact per view
  for (int v = 0; v < dataset.n_views(); ++v) {
    const std::vector<Index> rows = observed_rows(dataset.mask, v);
    const Matrix z = encode(gather_observed(dataset.views[v], rows), v, state);
    semantic.push_back(contrastive_head(z, state));
    latent_full.push_back(expand_rows(z, rows, dataset.n()));
  }

  const Matrix consensus = fuse(latent_full, dataset.mask, weights);
  art.prototypes = consensus_prototypes(consensus, k, seed);
  art.prototypes.per_view = per_view_prototypes(semantic, k, mix_seed(seed, 0x9e37));

  for (int v = 0; v < dataset.n_views(); ++v) {
    art.t_labels.push_back(t_dist_labels(semantic[v], art.prototypes.per_view[v], cse.t_dof));
    double ent = 0.0;
    const Matrix& l = art.t_labels.back();
    for (Index i = 0; i < l.rows(); ++i)
      for (Index j = 0; j < l.cols(); ++j)
        if (l(i, j) > 0.0) ent += l(i, j) * std::log(std::max(l(i, j), kLogFloor));
    art.t_label_entropy.push_back(ent);
  }
  return art;
}

CcSupervision prepare_cc_supervision(const ModelState& state,
                                     const MultiViewDataset& dataset,
                                     const PrototypeSet& prototypes,
                                     const std::vector<Index>& batch,
                                     const CslConfig& config) {
  config.validate();
  CcSupervision sup;
  const int v = dataset.n_views();
  for (int m = 0; m < v; ++m) {
    for (int n = m + 1; n < v; ++n) {
      CcSupervision::Pair pair;
      pair.m = m;
      pair.n = n;
      for (Index i : batch)
        if (dataset.mask(i, m) && dataset.mask(i, n)) pair.instances.push_back(i);
      if (!pair.instances.empty()) {
        const Matrix hm = contrastive_head(
            encode(gather_observed(dataset.views[m], pair.instances), m, state), state);
        const Matrix hn = contrastive_head(
            encode(gather_observed(dataset.views[n], pair.instances), n, state), state);
        pair.q_m = sinkhorn_labels(hm, prototypes.prototypes, config.smoothness,
                                   config.sinkhorn_iters);
        pair.q_n = sinkhorn_labels(hn, prototypes.prototypes, config.smoothness,
                                   config.sinkhorn_iters);
      }
      sup.pairs.push_back(std::move(pair));
    }
  }
  return sup;
}

BatchNodes encode_batch(ParamBinding& pb, const MultiViewDataset& dataset,
                        const std::vector<Index>& batch) {
  BatchNodes nodes;
  for (int v = 0; v < dataset.n_views(); ++v) {
    nodes.view_instances.push_back(batch_observed(dataset.mask, batch, v));
    if (nodes.view_instances.back().empty()) {
      nodes.x_nodes.push_back(-1);
      nodes.z_nodes.push_back(-1);
      continue;
    }
    const int x = pb.tape().constant(
        gather_observed(dataset.views[v], nodes.view_instances.back()));
    nodes.x_nodes.push_back(x);
    nodes.z_nodes.push_back(encode_node(pb, x, v));
  }
  return nodes;
}

int rec_loss_node(ParamBinding& pb, const BatchNodes& nodes) {
  ad::Tape& t = pb.tape();
  int total = -1;
  for (std::size_t v = 0; v < nodes.z_nodes.size(); ++v) {
    if (nodes.z_nodes[v] < 0) continue;
    const int xhat = decode_node(pb, nodes.z_nodes[v], int(v));
    const int diff = t.sub(nodes.x_nodes[v], xhat);
    const int term = t.sum(t.cwise_mul(diff, diff));
    total = total < 0 ? term : t.add(total, term);
  }
  return total;
}

namespace {

// -(1/rows) * sum(Q .* max(log_softmax(H C^T / tau), log floor))
int kd_direction_node(ad::Tape& t, int h_node, const Matrix& prototypes, const Matrix& q,
                      double tau) {
  const int scores = t.scale(t.matmul(h_node, t.constant(prototypes.transpose())), 1.0 / tau);
  const int logp = t.cwise_max_const(t.log_softmax_rows(scores), kLogFloorLn);
  const int weighted = t.cwise_mul(t.constant(q), logp);
  return t.scale(t.sum(weighted), -1.0 / double(q.rows()));
}

}  // namespace

int cc_loss_node(ParamBinding& pb, const BatchNodes& nodes,
                 const PrototypeSet& prototypes, const CcSupervision& supervision,
                 const CslConfig& config) {
  ad::Tape& t = pb.tape();
  int total = -1;
  for (const CcSupervision::Pair& pair : supervision.pairs) {
    if (pair.instances.empty()) continue;
    // Positions of the paired instances inside each view's batch rows; both
    // lists preserve batch order, so a single forward sweep finds them.
    auto positions = [&](int view) {
      std::vector<Index> pos;
      const auto& rows = nodes.view_instances[view];
      std::size_t r = 0;
      for (Index id : pair.instances) {
        while (r < rows.size() && rows[r] != id) ++r;
        if (r == rows.size()) throw ShapeError("paired instance missing from view batch");
        pos.push_back(Index(r++));
      }
      return pos;
    };
    const int hm = head_node(pb, t.gather_rows(nodes.z_nodes[pair.m], positions(pair.m)));
    const int hn = head_node(pb, t.gather_rows(nodes.z_nodes[pair.n], positions(pair.n)));
    const int dir_mn = kd_direction_node(t, hm, prototypes.prototypes, pair.q_n,
                                         config.temperature);
    const int dir_nm = kd_direction_node(t, hn, prototypes.prototypes, pair.q_m,
                                         config.temperature);
    const int term = t.add(dir_mn, dir_nm);
    total = total < 0 ? term : t.add(total, term);
  }
  return total;
}

int gc_loss_node(ParamBinding& pb, const MultiViewDataset& dataset,
                 const GraphSet& graphs, const EpochArtifacts& artifacts,
                 const CseConfig& config) {
  ad::Tape& t = pb.tape();
  int total = -1;
  for (int v = 0; v < dataset.n_views(); ++v) {
    const ViewGraph& g = graphs.graphs[v];
    if (!(g.edge_count > 0.0))
      throw DataError("view " + std::to_string(v + 1) + " graph has no edges");
    const double two_m = 2.0 * g.edge_count;

    const int x = t.constant(gather_observed(dataset.views[v], graphs.nodes[v]));
    const int z = encode_node(pb, x, v);
    const int emb = gcn_node(pb, z, graphs.norm_adjacency[v], v);
    const std::size_t cls = pb.state().classifier_offset();
    const int logits = t.add_rowvec(t.matmul(emb, pb.node(cls)), pb.node(cls + 1));
    const int p = t.softmax_rows(logits);

    // -(1/2m) (sum(P .* (A P)) - |d^T P|^2 / 2m)
    const int ap = t.matmul(t.constant(g.adjacency), p);
    const int edge_term = t.sum(t.cwise_mul(p, ap));
    const int dp = t.matmul(t.constant(g.degrees.transpose()), p);
    const int dp2 = t.sum(t.cwise_mul(dp, dp));
    const int trace = t.add(edge_term, t.scale(dp2, -1.0 / two_m));
    int term = t.scale(trace, -1.0 / two_m);

    if (config.kl_weight > 0.0) {
      // lambda * (sum L log L - sum(L .* max(log_softmax(logits), floor)))
      const int logp = t.cwise_max_const(t.log_softmax_rows(logits), kLogFloorLn);
      const int cross = t.sum(t.cwise_mul(t.constant(artifacts.t_labels[v]), logp));
      const int ent = t.constant(Matrix::Constant(1, 1, artifacts.t_label_entropy[v]));
      const int kl = t.add(ent, t.scale(cross, -1.0));
      term = t.add(term, t.scale(kl, config.kl_weight));
    }
    total = total < 0 ? term : t.add(total, term);
  }
  return total;
}

// --- value wrappers ----------------------------------------------------------

double rec_loss_value(const ModelState& state, const MultiViewDataset& dataset,
                      const std::vector<Index>& batch) {
  ad::Tape tape;
  ParamBinding pb(tape, state);
  const BatchNodes nodes = encode_batch(pb, dataset, batch);
  const int loss = rec_loss_node(pb, nodes);
  return loss < 0 ? 0.0 : tape.scalar_value(loss);
}

double cc_loss_value(const ModelState& state, const MultiViewDataset& dataset,
                     const PrototypeSet& prototypes, const std::vector<Index>& batch,
                     const CcSupervision& supervision, const CslConfig& config) {
  ad::Tape tape;
  ParamBinding pb(tape, state);
  const BatchNodes nodes = encode_batch(pb, dataset, batch);
  const int loss = cc_loss_node(pb, nodes, prototypes, supervision, config);
  return loss < 0 ? 0.0 : tape.scalar_value(loss);
}

double gc_loss_value(const ModelState& state, const MultiViewDataset& dataset,
                     const GraphSet& graphs, const EpochArtifacts& artifacts,
                     const CseConfig& config) {
  ad::Tape tape;
  ParamBinding pb(tape, state);
  const int loss = gc_loss_node(pb, dataset, graphs, artifacts, config);
  return loss < 0 ? 0.0 : tape.scalar_value(loss);
}

// --- csl/cse module surfaces backed by the builders --------------------------

double total_cc_loss(const ModelState& state, const MultiViewDataset& dataset,
                     const PrototypeSet& prototypes, const std::vector<Index>& batch,
                     const CslConfig& config) {
  const CcSupervision sup =
      prepare_cc_supervision(state, dataset, prototypes, batch, config);
  return cc_loss_value(state, dataset, prototypes, batch, sup, config);
}

Matrix node_assign(const Matrix& latent_rows, const ViewGraph& graph, int view,
                   const ModelState& state) {
  const Matrix emb = gcn_forward(latent_rows, graph.adjacency, view, state);
  Matrix logits = (emb * state.classifier_w()).rowwise() + state.classifier_b().row(0);
  for (Index i = 0; i < logits.rows(); ++i) {
    logits.row(i) = (logits.row(i).array() - logits.row(i).maxCoeff()).exp();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

double total_gc_loss(const ModelState& state, const MultiViewDataset& dataset,
                     const std::vector<ViewGraph>& graphs,
                     const std::vector<Matrix>& t_labels, const CseConfig& config) {
  config.validate();
  double total = 0.0;
  for (int v = 0; v < dataset.n_views(); ++v) {
    const std::vector<Index> rows = observed_rows(dataset.mask, v);
    const Matrix z = encode(gather_observed(dataset.views[v], rows), v, state);
    const Matrix p = node_assign(z, graphs[v], v, state);
    const Matrix b = modularity_matrix(graphs[v]);
    total += kl_modularity_loss(p, b, t_labels[v], config.kl_weight, graphs[v].edge_count);
  }
  return total;
}

}  // namespace freecsl
