// oracles.hpp - independent brute-force references used only by tests:
// exhaustive partition search, transport-polytope grid search, permutation
// accuracy, pair-counting ARI, and central finite differences. None of these
// share code with the implementation paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "freecsl/common.hpp"

namespace oracles {

using freecsl::Index;
using freecsl::Matrix;

// Best k-means inertia over all assignments of m points to k clusters
// (every cluster nonempty), centroids at cluster means.
inline double best_partition_inertia(const Matrix& points, int k) {
  const Index m = points.rows();
  std::vector<int> assign(m, 0);
  double best = std::numeric_limits<double>::infinity();
  const long total = static_cast<long>(std::pow(double(k), double(m)));
  for (long code = 0; code < total; ++code) {
    long c = code;
    std::vector<Index> counts(k, 0);
    for (Index i = 0; i < m; ++i) {
      assign[i] = int(c % k);
      ++counts[assign[i]];
      c /= k;
    }
    if (std::find(counts.begin(), counts.end(), 0) != counts.end()) continue;
    Matrix centroids = Matrix::Zero(k, points.cols());
    for (Index i = 0; i < m; ++i) centroids.row(assign[i]) += points.row(i);
    for (int j = 0; j < k; ++j) centroids.row(j) /= double(counts[j]);
    double inertia = 0.0;
    for (Index i = 0; i < m; ++i)
      inertia += (points.row(i) - centroids.row(assign[i])).squaredNorm();
    best = std::min(best, inertia);
  }
  return best;
}

// Entropy-regularized transport objective <Q,S> + alpha H(Q).
inline double transport_obj(const Matrix& q, const Matrix& s, double alpha) {
  double v = 0.0;
  for (Index i = 0; i < q.rows(); ++i)
    for (Index j = 0; j < q.cols(); ++j) {
      v += q(i, j) * s(i, j);
      if (q(i, j) > 0.0) v -= alpha * q(i, j) * std::log(q(i, j));
    }
  return v;
}

// Grid search over the transportation polytope with uniform marginals for
// B = K = 2 (one free parameter) or B = K = 3 (four free parameters), with
// two local refinement passes around the best grid point.
inline double grid_search_transport_max(const Matrix& s, double alpha) {
  const Index b = s.rows();
  auto obj22 = [&](double t) {
    Matrix q(2, 2);
    q << t, 0.5 - t, 0.5 - t, t;
    return transport_obj(q, s, alpha);
  };
  if (b == 2) {
    double best = -1e300, best_t = 0.25;
    for (int step = 0; step <= 2000; ++step) {
      const double t = 0.5 * step / 2000.0;
      const double v = obj22(t);
      if (v > best) {
        best = v;
        best_t = t;
      }
    }
    for (double h = 1e-4; h >= 1e-6; h /= 10.0) {
      for (double t = std::max(0.0, best_t - 10 * h); t <= std::min(0.5, best_t + 10 * h);
           t += h) {
        const double v = obj22(t);
        if (v > best) {
          best = v;
          best_t = t;
        }
      }
    }
    return best;
  }

  // 3x3: free block q00,q01,q10,q11; the rest follows from the marginals.
  auto make_q = [&](double a0, double a1, double a2, double a3, Matrix& q) {
    q(0, 0) = a0;
    q(0, 1) = a1;
    q(0, 2) = 1.0 / 3.0 - a0 - a1;
    q(1, 0) = a2;
    q(1, 1) = a3;
    q(1, 2) = 1.0 / 3.0 - a2 - a3;
    q(2, 0) = 1.0 / 3.0 - a0 - a2;
    q(2, 1) = 1.0 / 3.0 - a1 - a3;
    q(2, 2) = a0 + a1 + a2 + a3 - 1.0 / 3.0;
    return q.minCoeff() >= 0.0;
  };
  Matrix q(3, 3);
  double best = -1e300;
  double bx[4] = {1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9};
  const int steps = 30;
  const double width = 1.0 / 3.0;
  for (int i0 = 0; i0 <= steps; ++i0)
    for (int i1 = 0; i1 <= steps - 0; ++i1)
      for (int i2 = 0; i2 <= steps; ++i2)
        for (int i3 = 0; i3 <= steps; ++i3) {
          const double a0 = width * i0 / steps, a1 = width * i1 / steps,
                       a2 = width * i2 / steps, a3 = width * i3 / steps;
          if (!make_q(a0, a1, a2, a3, q)) continue;
          const double v = transport_obj(q, s, alpha);
          if (v > best) {
            best = v;
            bx[0] = a0;
            bx[1] = a1;
            bx[2] = a2;
            bx[3] = a3;
          }
        }
  double h = width / steps;
  for (int pass = 0; pass < 3; ++pass) {
    h /= 10.0;
    double cx[4] = {bx[0], bx[1], bx[2], bx[3]};
    for (int i0 = -10; i0 <= 10; ++i0)
      for (int i1 = -10; i1 <= 10; ++i1)
        for (int i2 = -10; i2 <= 10; ++i2)
          for (int i3 = -10; i3 <= 10; ++i3) {
            const double a0 = cx[0] + h * i0, a1 = cx[1] + h * i1, a2 = cx[2] + h * i2,
                         a3 = cx[3] + h * i3;
            if (a0 < 0 || a1 < 0 || a2 < 0 || a3 < 0) continue;
            if (!make_q(a0, a1, a2, a3, q)) continue;
            const double v = transport_obj(q, s, alpha);
            if (v > best) {
              best = v;
              bx[0] = a0;
              bx[1] = a1;
              bx[2] = a2;
              bx[3] = a3;
            }
          }
  }
  return best;
}

// Maximum matched fraction over all k! cluster-to-label permutations.
inline double permutation_accuracy(const std::vector<int>& pred,
                                   const std::vector<int>& truth, int k) {
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    Index hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (perm[pred[i]] == truth[i]) ++hits;
    best = std::max(best, double(hits) / double(pred.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// ARI from explicit enumeration of all C(N,2) instance pairs.
inline double pair_counting_ari(const std::vector<int>& pred,
                                const std::vector<int>& truth) {
  const std::size_t n = pred.size();
  double both = 0, pred_only = 0, truth_only = 0, neither = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sp = pred[i] == pred[j];
      const bool st = truth[i] == truth[j];
      if (sp && st) ++both;
      else if (sp) ++pred_only;
      else if (st) ++truth_only;
      else ++neither;
    }
  const double total = both + pred_only + truth_only + neither;
  const double expected = (both + pred_only) * (both + truth_only) / total;
  const double maximum = 0.5 * ((both + pred_only) + (both + truth_only));
  if (maximum == expected) return 0.0;
  return (both - expected) / (maximum - expected);
}

// Central finite differences of a scalar function of one matrix entry.
inline double central_difference(const std::function<double()>& f, double& entry,
                                 double h) {
  const double saved = entry;
  entry = saved + h;
  const double up = f();
  entry = saved - h;
  const double down = f();
  entry = saved;
  return (up - down) / (2.0 * h);
}

// Relative error with a small absolute floor for near-zero gradients.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), 1e-6);
}

}  // namespace oracles
