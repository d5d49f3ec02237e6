// losses.hpp - builds the three training objectives on an autodiff tape and
// prepares the per-epoch constants (prototypes, self-labels, graphs) they
// consume. Pseudo-labels and prototypes enter only as constants.
#pragma once

#include <vector>

#include "freecsl/csl.hpp"
#include "freecsl/cse.hpp"
#include "freecsl/data.hpp"
#include "freecsl/fusion.hpp"
#include "freecsl/nets.hpp"

namespace freecsl {

// Static per-view graphs over observed rows, built once from the original
// (normalized) features, with the degree-normalized adjacency cached.
struct GraphSet {
  std::vector<ViewGraph> graphs;
  std::vector<Matrix> norm_adjacency;
  std::vector<std::vector<Index>> nodes;  // instance id per graph row
};

GraphSet build_graphs(const MultiViewDataset& dataset, int zeta);

// Per-epoch constants: consensus prototypes from the fused latent rows,
// per-view prototypes over semantic rows, and Student's-t self-labels.
struct EpochArtifacts {
  PrototypeSet prototypes;
  std::vector<Matrix> t_labels;        // per view, N_v x K
  std::vector<double> t_label_entropy; // sum l log l per view (loss constant)
};

EpochArtifacts build_epoch_artifacts(const ModelState& state,
                                     const MultiViewDataset& dataset,
                                     std::uint64_t seed, const CseConfig& cse);

// Pseudo-labels for the paired subsets of one batch, frozen before the
// differentiable pass. pair (m, n) is stored once with m < n.
struct CcSupervision {
  struct Pair {
    int m = 0, n = 0;
    std::vector<Index> instances;  // paired instances inside the batch
    Matrix q_m, q_n;               // transport labels, rows sum to 1
  };
  std::vector<Pair> pairs;
};

CcSupervision prepare_cc_supervision(const ModelState& state,
                                     const MultiViewDataset& dataset,
                                     const PrototypeSet& prototypes,
                                     const std::vector<Index>& batch,
                                     const CslConfig& config);

// --- tape builders -----------------------------------------------------------
// Each returns the node id of a scalar loss term (or -1 when the term is
// empty for this batch) and reuses encoder outputs across terms via
// per-view latent nodes.

struct BatchNodes {
  std::vector<std::vector<Index>> view_instances;  // observed batch rows per view
  std::vector<int> x_nodes;                        // constants, compact inputs
  std::vector<int> z_nodes;                        // encoder outputs
};

// Encodes the observed batch rows of every view once.
BatchNodes encode_batch(ParamBinding& pb, const MultiViewDataset& dataset,
                        const std::vector<Index>& batch);

int rec_loss_node(ParamBinding& pb, const BatchNodes& nodes);

int cc_loss_node(ParamBinding& pb, const BatchNodes& nodes,
                 const PrototypeSet& prototypes, const CcSupervision& supervision,
                 const CslConfig& config);

int gc_loss_node(ParamBinding& pb, const MultiViewDataset& dataset,
                 const GraphSet& graphs, const EpochArtifacts& artifacts,
                 const CseConfig& config);

// --- frozen-supervision values (gradient-check oracles evaluate these) -------

double rec_loss_value(const ModelState& state, const MultiViewDataset& dataset,
                      const std::vector<Index>& batch);

double cc_loss_value(const ModelState& state, const MultiViewDataset& dataset,
                     const PrototypeSet& prototypes, const std::vector<Index>& batch,
                     const CcSupervision& supervision, const CslConfig& config);

double gc_loss_value(const ModelState& state, const MultiViewDataset& dataset,
                     const GraphSet& graphs, const EpochArtifacts& artifacts,
                     const CseConfig& config);

}  // namespace freecsl
