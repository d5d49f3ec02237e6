#include "freecsl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace freecsl {

namespace {

void check_lengths(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size())
    throw ShapeError("metric inputs differ in length: " + std::to_string(pred.size()) +
                     " vs " + std::to_string(truth.size()));
  if (pred.empty()) throw ShapeError("metric inputs are empty");
}

Matrix contingency(const std::vector<int>& pred, const std::vector<int>& truth, int rows,
                   int cols) {
  Matrix c = Matrix::Zero(rows, cols);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= rows || truth[i] < 0 || truth[i] >= cols)
      throw DataError("label outside the declared range");
    c(pred[i], truth[i]) += 1.0;
  }
  return c;
}

}  // namespace

// Jonker-Volgenant style shortest augmenting path assignment, O(k^3).
// Maximizes total weight by minimizing the negated matrix.
std::vector<int> max_weight_assignment(const Matrix& weights) {
  const int n = int(weights.rows());
  if (weights.cols() != n) throw ShapeError("assignment matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  Matrix cost = -weights;

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> way(n + 1, 0), match(n + 1, 0);  // match[col] = row, 1-based
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= n; ++j)
    if (match[j] != 0) col_of_row[match[j] - 1] = j - 1;
  return col_of_row;
}

double clustering_accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                           int k) {
  check_lengths(pred, truth);
  if (k < 1) throw ConfigError("clustering_accuracy: k must be >= 1");
  const Matrix c = contingency(pred, truth, k, k);
  const std::vector<int> col_of_row = max_weight_assignment(c);
  double matched = 0.0;
  for (int r = 0; r < k; ++r) matched += c(r, col_of_row[r]);
  return matched / double(pred.size());
}

namespace {

double entropy_of_counts(const Vector& counts, double n) {
  double h = 0.0;
  for (Index i = 0; i < counts.size(); ++i) {
    if (counts(i) > 0.0) {
      const double p = counts(i) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  check_lengths(pred, truth);
  const int kp = 1 + *std::max_element(pred.begin(), pred.end());
  const int kt = 1 + *std::max_element(truth.begin(), truth.end());
  const double n = double(pred.size());
  const Matrix c = contingency(pred, truth, kp, kt);
  const Vector a = c.rowwise().sum();
  const Vector b = c.colwise().sum();

  double mi = 0.0;
  for (int i = 0; i < kp; ++i)
    for (int j = 0; j < kt; ++j)
      if (c(i, j) > 0.0)
        mi += (c(i, j) / n) * std::log(n * c(i, j) / (a(i) * b(j)));

  const double hp = entropy_of_counts(a, n);
  const double ht = entropy_of_counts(b, n);
  if (hp <= 0.0 || ht <= 0.0) return 0.0;  // single-cluster degenerate case
  return mi / (0.5 * (hp + ht));
}

double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
  check_lengths(pred, truth);
  const int kp = 1 + *std::max_element(pred.begin(), pred.end());
  const int kt = 1 + *std::max_element(truth.begin(), truth.end());
  const Matrix c = contingency(pred, truth, kp, kt);
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };

  double sum_cells = 0.0;
  for (int i = 0; i < kp; ++i)
    for (int j = 0; j < kt; ++j) sum_cells += choose2(c(i, j));
  double sum_rows = 0.0, sum_cols = 0.0;
  for (int i = 0; i < kp; ++i) sum_rows += choose2(c.row(i).sum());
  for (int j = 0; j < kt; ++j) sum_cols += choose2(c.col(j).sum());
  const double total = choose2(double(pred.size()));

  const double expected = sum_rows * sum_cols / total;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 0.0;  // both partitions degenerate
  return (sum_cells - expected) / (maximum - expected);
}

MetricReport evaluate_clustering(const std::vector<int>& pred,
                                 const std::vector<int>& truth, int k) {
  MetricReport r;
  r.acc = clustering_accuracy(pred, truth, k);
  r.nmi = nmi(pred, truth);
  r.ari = ari(pred, truth);
  r.n = Index(pred.size());
  r.k = k;
  return r;
}

bool semantic_consensus(const RowVector& h_a, const RowVector& h_b,
                        const Matrix& prototypes) {
  auto arg_best = [&](const RowVector& h) {
    Index best = 0;
    double best_score = h.dot(prototypes.row(0));
    for (Index k = 1; k < prototypes.rows(); ++k) {
      const double s = h.dot(prototypes.row(k));
      if (s > best_score) {  // ties keep the lower index
        best_score = s;
        best = k;
      }
    }
    return best;
  };
  return arg_best(h_a) == arg_best(h_b);
}

double paired_consensus_rate(const std::vector<Matrix>& semantic,
                             const std::vector<std::vector<Index>>& observed,
                             const BoolMatrix& mask, const Matrix& prototypes) {
  const int n_views = int(semantic.size());
  std::vector<std::vector<Index>> pos(n_views, std::vector<Index>(mask.rows(), -1));
  for (int v = 0; v < n_views; ++v)
    for (std::size_t r = 0; r < observed[v].size(); ++r) pos[v][observed[v][r]] = Index(r);

  Index agree = 0, total = 0;
  for (int m = 0; m < n_views; ++m)
    for (int n = m + 1; n < n_views; ++n)
      for (Index i = 0; i < mask.rows(); ++i) {
        if (!mask(i, m) || !mask(i, n)) continue;
        ++total;
        if (semantic_consensus(semantic[m].row(pos[m][i]), semantic[n].row(pos[n][i]),
                               prototypes))
          ++agree;
      }
  return total == 0 ? 1.0 : double(agree) / double(total);
}

Matrix similarity_matrix(const Matrix& h, const std::vector<int>& order_by) {
  std::vector<Index> order(h.rows());
  std::iota(order.begin(), order.end(), Index(0));
  if (!order_by.empty()) {
    if (static_cast<Index>(order_by.size()) != h.rows())
      throw ShapeError("similarity_matrix: label vector length mismatch");
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return order_by[a] < order_by[b]; });
  }
  Matrix sorted(h.rows(), h.cols());
  for (Index i = 0; i < h.rows(); ++i) sorted.row(i) = h.row(order[i]);
  Vector norms = sorted.rowwise().norm();
  for (Index i = 0; i < norms.size(); ++i)
    if (norms(i) == 0.0) norms(i) = 1.0;
  const Matrix unit = norms.cwiseInverse().asDiagonal() * sorted;
  return unit * unit.transpose();
}

void write_matrix_csv(const Matrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out.precision(10);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << "\n";
  }
}

void write_pgm_heatmap(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "P5\n" << m.cols() << " " << m.rows() << "\n255\n";
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const double clipped = std::min(1.0, std::max(-1.0, m(i, j)));
      out.put(char(std::lround((clipped + 1.0) * 127.5)));
    }
}

}  // namespace freecsl
