// fusion.hpp - completeness-weighted fusion of per-view representations and
// prototype construction via seeded k-means.
#pragma once

#include <vector>

#include "freecsl/common.hpp"

namespace freecsl {

// Instance-level fusion weights: 1/(observed view count) where observed, 0
// elsewhere. Rows sum to one; the integer counts are kept so the row total
// can always be reproduced exactly as count * (1/count).
struct FusionWeights {
  Matrix weights;           // N x V
  IntVector observed_count; // N, >= 1

  double row_total(Index i) const { return observed_count(i) * weights.row(i).maxCoeff(); }
};

FusionWeights completeness_weights(const BoolMatrix& mask);

// Consensus representation: row i is the weighted sum of the observed
// per-view rows, i.e. their arithmetic mean. Masked rows are never read.
Matrix fuse(const std::vector<Matrix>& reps, const BoolMatrix& mask,
            const FusionWeights& weights);

// Scatters a compact matrix of observed rows back to full height, filling
// unobserved rows with the NaN sentinel.
Matrix expand_rows(const Matrix& compact, const std::vector<Index>& rows, Index n);

struct KMeansResult {
  Matrix centroids;                    // k x d
  std::vector<int> assignment;         // size M
  std::vector<double> inertia_history; // per Lloyd iteration
  double inertia = 0.0;
  int iterations = 0;
};

// Seeded k-means++ followed by Lloyd iterations, best of n_init restarts.
// Deterministic given the seed; empty clusters are reseeded to the point
// farthest from its centroid, so the returned solution never has an empty
// cluster.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed,
                    int max_iter = 100, double tol = 1e-7, int n_init = 10);

struct PrototypeSet {
  Matrix prototypes;              // K x d, unit-normalized rows
  std::vector<Matrix> per_view;   // optional, raw per-view centroids
};

// k-means centroids of the consensus representations, rows L2-normalized.
// Constant with respect to gradient flow for the epoch that built them.
PrototypeSet consensus_prototypes(const Matrix& consensus_reps, int k, std::uint64_t seed);

// Independent k-means per view over that view's observed semantic rows.
std::vector<Matrix> per_view_prototypes(const std::vector<Matrix>& view_reps, int k,
                                        std::uint64_t seed);

}  // namespace freecsl
