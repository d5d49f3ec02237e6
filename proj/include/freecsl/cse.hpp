// cse.hpp - cluster semantic enhancement: per-view KNN graphs, modularity
// matrix, Student's-t self-labels, and the KL-regularized modularity loss.
#pragma once

#include <string>
#include <vector>

#include "freecsl/common.hpp"

namespace freecsl {

struct CseConfig {
  int neighbors = 3;      // zeta >= 1, < N_v for every view
  double kl_weight = 0.1; // lambda >= 0
  double t_dof = 1.0;     // gamma > 0

  void validate() const {
    if (neighbors < 1) throw ConfigError("neighbors must be >= 1");
    if (kl_weight < 0.0) throw ConfigError("kl_weight must be >= 0");
    if (!(t_dof > 0.0)) throw ConfigError("t_dof must be positive");
  }
};

// Undirected simple graph over one view's observed rows.
struct ViewGraph {
  Matrix adjacency;   // N_v x N_v, entries 0/1, zero diagonal, symmetric
  Vector degrees;     // row sums
  double edge_count;  // m = sum(degrees) / 2

  Index size() const { return adjacency.rows(); }
  void validate() const;
};

// Symmetric KNN adjacency over the given observed feature rows: an edge
// whenever either endpoint lists the other among its zeta nearest neighbors
// (Euclidean). Distance ties break toward the lower row index.
ViewGraph knn_adjacency(const Matrix& observed_rows, int zeta);

// B = A - d d^T / (2m). Throws on edgeless graphs (modularity undefined).
Matrix modularity_matrix(const ViewGraph& graph);

// Tr(P^T B P) computed from the graph structure without materializing B:
// sum(P .* (A P)) - |d^T P|^2 / (2m).
double modularity_trace(const Matrix& p, const ViewGraph& graph);

// Student's-t kernel labels over per-view prototypes, rows normalized.
// Constant supervision; gradients never flow through the result.
template <class DH, class DC>
Mat<typename DH::Scalar> t_dist_labels(const Eigen::MatrixBase<DH>& H,
                                       const Eigen::MatrixBase<DC>& prototypes,
                                       double gamma) {
  using S = typename DH::Scalar;
  if (!(gamma > 0.0)) throw ConfigError("t_dist_labels: gamma must be positive");
  const Index n = H.rows();
  const Index k = prototypes.rows();
  Mat<S> l(n, k);
  const double expo = -(gamma + 1.0) / 2.0;
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < k; ++c) {
      const double d2 = (H.row(i) - prototypes.row(c)).squaredNorm();
      l(i, c) = S(std::pow(1.0 + d2 / gamma, expo));
    }
    l.row(i) /= l.row(i).sum();
  }
  return l;
}

// -(1/2m) Tr(P^T B P) + lambda * KL(L || P), with logs floored at 1e-12.
double kl_modularity_loss(const Matrix& p, const Matrix& b, const Matrix& l,
                          double lambda, double m);

// KL(L || P) with logs floored at 1e-12; shared by the loss builders.
double kl_divergence(const Matrix& l, const Matrix& p);

// Writes one "i j" line per undirected edge (i < j).
void export_edge_list(const ViewGraph& graph, const std::string& path);

// Defined with the model in losses.cpp.
struct MultiViewDataset;
class ModelState;

// Softmax over the shared classifier applied to the GCN embedding of the
// given latent rows; rows sum to one.
Matrix node_assign(const Matrix& latent_rows, const ViewGraph& graph, int view,
                   const ModelState& state);

// Sum over views of the KL-modularity loss on each view's observed subgraph.
double total_gc_loss(const ModelState& state, const MultiViewDataset& dataset,
                     const std::vector<ViewGraph>& graphs,
                     const std::vector<Matrix>& t_labels, const CseConfig& config);

}  // namespace freecsl
