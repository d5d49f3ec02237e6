// csl.hpp - consensus semantic learning: temperature-softmax assignments over
// shared prototypes, entropy-regularized transport pseudo-labels, and the
// swapped knowledge-distillation loss.
#pragma once

#include <cmath>
#include <vector>

#include "freecsl/common.hpp"

namespace freecsl {

struct CslConfig {
  double temperature = 0.1;  // tau in (0, 1]
  double smoothness = 0.5;   // alpha > 0
  int sinkhorn_iters = 3;    // >= 1; tests use >= 10 for tight marginals

  void validate() const {
    if (!(temperature > 0.0) || temperature > 1.0)
      throw ConfigError("temperature must lie in (0, 1]");
    if (!(smoothness > 0.0)) throw ConfigError("smoothness must be positive");
    if (sinkhorn_iters < 1) throw ConfigError("sinkhorn_iters must be >= 1");
  }
};

// Soft assignments and transport pseudo-labels for one batch/view. Every row
// of both matrices sums to one.
struct AssignmentBundle {
  Matrix soft;                    // rows x K, p_i
  Matrix pseudo;                  // rows x K, q_i
  std::vector<Index> row_index;   // instance ids
};

// Row-wise temperature softmax of H * C^T / tau, computed with
// max-subtraction. Rows of H and C are expected to be unit-normalized.
template <class DH, class DC>
Mat<typename DH::Scalar> soft_assign(const Eigen::MatrixBase<DH>& H,
                                     const Eigen::MatrixBase<DC>& C, double tau) {
  using S = typename DH::Scalar;
  if (!(tau > 0.0)) throw ConfigError("soft_assign: temperature must be positive");
  Mat<S> scores = (H * C.transpose()) / S(tau);
  Mat<S> p(scores.rows(), scores.cols());
  for (Index i = 0; i < scores.rows(); ++i) {
    const S mx = scores.row(i).maxCoeff();
    p.row(i) = (scores.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

// Sinkhorn-Knopp scaling of exp(S / alpha) toward uniform marginals on the
// transportation polytope {Q >= 0 : Q 1 = 1/B, Q^T 1 = 1/K}. Each round
// scales columns to 1/K then rows to 1/B.
template <class DS>
Mat<typename DS::Scalar> sinkhorn_plan(const Eigen::MatrixBase<DS>& scores, double alpha,
                                       int iters) {
  using S = typename DS::Scalar;
  if (!scores.allFinite()) throw Error("sinkhorn: non-finite score matrix");
  if (!(alpha > 0.0)) throw ConfigError("sinkhorn: smoothness must be positive");
  if (iters < 1) throw ConfigError("sinkhorn: needs at least one iteration");
  const Index b = scores.rows();
  const Index k = scores.cols();
  const S mx = scores.maxCoeff();
  Mat<S> q = ((scores.array() - mx) / S(alpha)).exp();
  for (int it = 0; it < iters; ++it) {
    for (Index c = 0; c < k; ++c) {
      const S s = q.col(c).sum();
      if (s > S(0)) q.col(c) *= S(1) / (S(k) * s);
    }
    for (Index r = 0; r < b; ++r) {
      const S s = q.row(r).sum();
      if (s > S(0)) q.row(r) *= S(1) / (S(b) * s);
    }
  }
  return q;
}

// Transport pseudo-labels: the plan with each row renormalized to sum to 1.
// Treated as constant supervision; gradients never flow through the result.
template <class DH, class DC>
Mat<typename DH::Scalar> sinkhorn_labels(const Eigen::MatrixBase<DH>& H,
                                         const Eigen::MatrixBase<DC>& C, double alpha,
                                         int iters) {
  using S = typename DH::Scalar;
  Mat<S> q = sinkhorn_plan((H * C.transpose()).eval(), alpha, iters);
  for (Index r = 0; r < q.rows(); ++r) {
    const S s = q.row(r).sum();
    if (s > S(0)) q.row(r) /= s;
  }
  return q;
}

// Objective of the entropy-regularized transport problem evaluated at a plan:
// <Q, S> + alpha * entropy(Q). Used by tests to compare against brute force.
template <class DQ, class DS>
double transport_objective(const Eigen::MatrixBase<DQ>& plan,
                           const Eigen::MatrixBase<DS>& scores, double alpha) {
  double linear = 0.0, entropy = 0.0;
  for (Index i = 0; i < plan.rows(); ++i)
    for (Index j = 0; j < plan.cols(); ++j) {
      const double q = plan(i, j);
      linear += q * scores(i, j);
      if (q > 0.0) entropy -= q * std::log(q);
    }
  return linear + alpha * entropy;
}

struct KdLoss {
  double value = 0.0;
  bool empty_pairing = false;
};

// Swapped knowledge distillation over one view pair: cross-entropy of each
// view's soft assignments against the other view's pseudo-labels, averaged
// over the paired rows. Logs are floored at 1e-12.
template <class D1, class D2, class D3, class D4>
KdLoss swapped_kd_pair(const Eigen::MatrixBase<D1>& p_m, const Eigen::MatrixBase<D2>& q_n,
                       const Eigen::MatrixBase<D3>& p_n, const Eigen::MatrixBase<D4>& q_m) {
  if (p_m.rows() != q_n.rows() || p_n.rows() != q_m.rows() || p_m.rows() != p_n.rows() ||
      p_m.cols() != q_n.cols() || p_n.cols() != q_m.cols() || p_m.cols() != p_n.cols())
    throw ShapeError("swapped_kd_pair: shape mismatch between assignments and labels");
  const Index rows = p_m.rows();
  if (rows == 0) return {0.0, true};
  double acc = 0.0;
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < p_m.cols(); ++k) {
      acc += double(q_n(i, k)) * std::log(std::max(double(p_m(i, k)), kLogFloor));
      acc += double(q_m(i, k)) * std::log(std::max(double(p_n(i, k)), kLogFloor));
    }
  return {-acc / double(rows), false};
}

// Forward declarations: the full contrastive-clustering loss over a batch is
// defined with the model in losses.cpp.
struct MultiViewDataset;
class ModelState;
struct PrototypeSet;

// Sum of swapped_kd_pair over all view pairs, restricted to the paired
// instances present in the batch. P comes from soft_assign on one view's
// semantic rows, Q from sinkhorn_labels on the other view's.
double total_cc_loss(const ModelState& state, const MultiViewDataset& dataset,
                     const PrototypeSet& prototypes, const std::vector<Index>& batch,
                     const CslConfig& config);

}  // namespace freecsl
