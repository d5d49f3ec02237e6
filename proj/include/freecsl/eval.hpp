// eval.hpp - clustering metrics (Hungarian-matched accuracy, NMI, ARI), the
// semantic-consensus predicate, and cosine similarity-matrix diagnostics.
#pragma once

#include <string>
#include <vector>

#include "freecsl/common.hpp"

namespace freecsl {

struct MetricReport {
  double acc = 0.0;  // [0, 1]
  double nmi = 0.0;  // [0, 1]
  double ari = 0.0;  // [-0.5, 1]
  Index n = 0;
  int k = 0;
};

// Best label matching over cluster-to-class bijections, solved on the k x k
// contingency matrix. Invariant under relabeling of the predictions.
double clustering_accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                           int k);

// Mutual information normalized by the arithmetic mean of the entropies;
// degenerate single-cluster cases return 0.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);

// Adjusted Rand index via the standard contingency formula.
double ari(const std::vector<int>& pred, const std::vector<int>& truth);

MetricReport evaluate_clustering(const std::vector<int>& pred,
                                 const std::vector<int>& truth, int k);

// Maximum-weight assignment on a square matrix; returns column chosen for
// each row. Exposed for direct testing against permutation search.
std::vector<int> max_weight_assignment(const Matrix& weights);

// True when both rows select the same prototype by inner product; the tie
// goes to the lower prototype index.
bool semantic_consensus(const RowVector& h_a, const RowVector& h_b, const Matrix& prototypes);

// Fraction of cross-view paired observations in agreement on the shared
// prototypes. Rows of `semantic` are per-view unit rows aligned to
// `observed`; pairs are enumerated over all view pairs.
double paired_consensus_rate(const std::vector<Matrix>& semantic,
                             const std::vector<std::vector<Index>>& observed,
                             const BoolMatrix& mask, const Matrix& prototypes);

// Pairwise cosine similarities with rows/columns sorted by label (stable by
// index). An empty label vector keeps the original order.
Matrix similarity_matrix(const Matrix& h, const std::vector<int>& order_by);

void write_matrix_csv(const Matrix& m, const std::string& path);

// 8-bit binary PGM; values are mapped linearly from [-1, 1] to [0, 255].
void write_pgm_heatmap(const Matrix& m, const std::string& path);

}  // namespace freecsl
