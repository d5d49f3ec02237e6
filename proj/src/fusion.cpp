#include "freecsl/fusion.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace freecsl {

FusionWeights completeness_weights(const BoolMatrix& mask) {
  const Index n = mask.rows();
  const Index v = mask.cols();
  FusionWeights fw;
  fw.weights = Matrix::Zero(n, v);
  fw.observed_count = IntVector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    int cnt = 0;
    for (Index j = 0; j < v; ++j) cnt += mask(i, j) ? 1 : 0;
    if (cnt == 0) throw DataError("instance " + std::to_string(i) + " observed in no view");
    fw.observed_count(i) = cnt;
    const double w = 1.0 / cnt;
    for (Index j = 0; j < v; ++j)
      if (mask(i, j)) fw.weights(i, j) = w;
  }
  return fw;
}

Matrix fuse(const std::vector<Matrix>& reps, const BoolMatrix& mask,
            const FusionWeights& weights) {
  if (reps.empty()) throw ShapeError("fuse requires at least one view");
  const Index n = mask.rows();
  const Index d = reps[0].cols();
  if (static_cast<Index>(reps.size()) != mask.cols())
    throw ShapeError("fuse: view count does not match mask");
  Matrix out = Matrix::Zero(n, d);
  for (Index v = 0; v < mask.cols(); ++v) {
    const Matrix& z = reps[v];
    if (z.rows() != n || z.cols() != d) throw ShapeError("fuse: view matrix shape mismatch");
    for (Index i = 0; i < n; ++i)
      if (mask(i, v)) out.row(i) += weights.weights(i, v) * z.row(i);
  }
  return out;
}

Matrix expand_rows(const Matrix& compact, const std::vector<Index>& rows, Index n) {
  Matrix out = Matrix::Constant(n, compact.cols(), std::numeric_limits<double>::quiet_NaN());
  if (compact.rows() != static_cast<Index>(rows.size()))
    throw ShapeError("expand_rows: row list does not match matrix height");
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(rows[r]) = compact.row(r);
  return out;
}

namespace {

double squared_distance(const Matrix& a, Index i, const Matrix& b, Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

Matrix kmeanspp_seed(const Matrix& points, int k, Rng& rng) {
  const Index m = points.rows();
  Matrix centroids(k, points.cols());
  centroids.row(0) = points.row(rng.uniform_index(m));
  Vector dist2 = Vector::Constant(m, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    for (Index i = 0; i < m; ++i)
      dist2(i) = std::min(dist2(i), squared_distance(points, i, centroids, c - 1));
    const double total = dist2.sum();
    Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      for (Index i = 0; i < m; ++i) {
        cum += dist2(i);
        if (cum >= target) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = rng.uniform_index(m);  // all points coincide
    }
    centroids.row(c) = points.row(pick);
  }
  return centroids;
}

}  // namespace

namespace {

KMeansResult kmeans_single(const Matrix& points, int k, std::uint64_t seed, int max_iter,
                           double tol) {
  const Index m = points.rows();
  Rng rng(seed);
  KMeansResult res;
  res.centroids = kmeanspp_seed(points, k, rng);
  res.assignment.assign(m, 0);

  for (int it = 0; it < max_iter; ++it) {
    // assignment step; ties go to the lower centroid index
    double inertia = 0.0;
    for (Index i = 0; i < m; ++i) {
      int best = 0;
      double best_d = squared_distance(points, i, res.centroids, 0);
      for (int c = 1; c < k; ++c) {
        const double d = squared_distance(points, i, res.centroids, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      res.assignment[i] = best;
      inertia += best_d;
    }
    res.inertia_history.push_back(inertia);
    res.inertia = inertia;
    res.iterations = it + 1;

    // update step
    Matrix next = Matrix::Zero(k, points.cols());
    std::vector<Index> counts(k, 0);
    for (Index i = 0; i < m; ++i) {
      next.row(res.assignment[i]) += points.row(i);
      ++counts[res.assignment[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        next.row(c) /= double(counts[c]);
      } else {
        // reseed an empty cluster to the point farthest from its centroid
        Index far = 0;
        double far_d = -1.0;
        for (Index i = 0; i < m; ++i) {
          const double d = squared_distance(points, i, res.centroids, res.assignment[i]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        next.row(c) = points.row(far);
        res.assignment[far] = c;
      }
    }

    const double shift = (next - res.centroids).rowwise().norm().maxCoeff();
    res.centroids = next;
    if (shift < tol) break;
  }

  // final assignment/inertia consistent with the returned centroids
  double inertia = 0.0;
  for (Index i = 0; i < m; ++i) {
    int best = 0;
    double best_d = squared_distance(points, i, res.centroids, 0);
    for (int c = 1; c < k; ++c) {
      const double d = squared_distance(points, i, res.centroids, c);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    res.assignment[i] = best;
    inertia += best_d;
  }
  res.inertia = inertia;
  res.inertia_history.push_back(inertia);
  return res;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter,
                    double tol, int n_init) {
  if (k < 1) throw ConfigError("kmeans needs k >= 1");
  if (points.rows() < k)
    throw ConfigError("kmeans needs at least k points, got " +
                      std::to_string(points.rows()) + " for k = " + std::to_string(k));
  if (n_init < 1) throw ConfigError("kmeans needs n_init >= 1");
  KMeansResult best;
  for (int restart = 0; restart < n_init; ++restart) {
    KMeansResult res =
        kmeans_single(points, k, mix_seed(seed, std::uint64_t(restart)), max_iter, tol);
    if (restart == 0 || res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

PrototypeSet consensus_prototypes(const Matrix& consensus_reps, int k, std::uint64_t seed) {
  PrototypeSet set;
  set.prototypes = kmeans(consensus_reps, k, seed).centroids;
  for (Index r = 0; r < set.prototypes.rows(); ++r) {
    const double norm = set.prototypes.row(r).norm();
    if (norm > 0.0)
      set.prototypes.row(r) /= norm;
    else
      set.prototypes.row(r).setConstant(1.0 / std::sqrt(double(set.prototypes.cols())));
  }
  return set;
}

std::vector<Matrix> per_view_prototypes(const std::vector<Matrix>& view_reps, int k,
                                        std::uint64_t seed) {
  std::vector<Matrix> out;
  for (std::size_t v = 0; v < view_reps.size(); ++v) {
    if (view_reps[v].rows() < k)
      throw ConfigError("view " + std::to_string(v + 1) + " has " +
                        std::to_string(view_reps[v].rows()) +
                        " observed rows, fewer than k = " + std::to_string(k));
    out.push_back(kmeans(view_reps[v], k, mix_seed(seed, v)).centroids);
  }
  return out;
}

}  // namespace freecsl
