#include "freecsl/cse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace freecsl {

void ViewGraph::validate() const {
  const Index n = adjacency.rows();
  if (adjacency.cols() != n) throw ShapeError("adjacency must be square");
  for (Index i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw DataError("adjacency must have a zero diagonal");
    for (Index j = i + 1; j < n; ++j) {
      if (adjacency(i, j) != adjacency(j, i)) throw DataError("adjacency must be symmetric");
      if (adjacency(i, j) != 0.0 && adjacency(i, j) != 1.0)
        throw DataError("adjacency entries must be 0 or 1");
    }
  }
  if (degrees.size() != n || std::abs(degrees.sum() / 2.0 - edge_count) > 1e-9)
    throw DataError("graph degree bookkeeping is inconsistent");
}

ViewGraph knn_adjacency(const Matrix& observed, int zeta) {
  const Index n = observed.rows();
  if (zeta < 1) throw ConfigError("knn_adjacency: zeta must be >= 1");
  if (zeta >= n)
    throw ConfigError("knn_adjacency: zeta = " + std::to_string(zeta) +
                      " must be smaller than the " + std::to_string(n) + " observed rows");

  ViewGraph g;
  g.adjacency = Matrix::Zero(n, n);

  std::vector<std::pair<double, Index>> dist(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j)
      dist[j] = {(observed.row(i) - observed.row(j)).squaredNorm(), j};
    dist[i].first = std::numeric_limits<double>::infinity();  // exclude self
    std::partial_sort(dist.begin(), dist.begin() + zeta, dist.end());
    for (int k = 0; k < zeta; ++k) {
      const Index j = dist[k].second;
      g.adjacency(i, j) = 1.0;
      g.adjacency(j, i) = 1.0;
    }
  }

  g.degrees = g.adjacency.rowwise().sum();
  g.edge_count = g.degrees.sum() / 2.0;
  return g;
}

Matrix modularity_matrix(const ViewGraph& graph) {
  if (!(graph.edge_count > 0.0))
    throw DataError("modularity is undefined for an edgeless graph");
  const double two_m = 2.0 * graph.edge_count;
  return graph.adjacency - (graph.degrees * graph.degrees.transpose()) / two_m;
}

double modularity_trace(const Matrix& p, const ViewGraph& graph) {
  if (p.rows() != graph.size()) throw ShapeError("modularity_trace: row count mismatch");
  if (!(graph.edge_count > 0.0))
    throw DataError("modularity is undefined for an edgeless graph");
  const double two_m = 2.0 * graph.edge_count;
  const double edge_term = (p.cwiseProduct(graph.adjacency * p)).sum();
  const RowVector dp = graph.degrees.transpose() * p;
  return edge_term - dp.squaredNorm() / two_m;
}

double kl_divergence(const Matrix& l, const Matrix& p) {
  if (l.rows() != p.rows() || l.cols() != p.cols())
    throw ShapeError("kl_divergence: shape mismatch");
  double acc = 0.0;
  for (Index i = 0; i < l.rows(); ++i)
    for (Index j = 0; j < l.cols(); ++j) {
      const double li = l(i, j);
      if (li > 0.0)
        acc += li * (std::log(std::max(li, kLogFloor)) -
                     std::log(std::max(p(i, j), kLogFloor)));
    }
  return acc;
}

double kl_modularity_loss(const Matrix& p, const Matrix& b, const Matrix& l,
                          double lambda, double m) {
  if (p.rows() != b.rows() || b.rows() != b.cols() || p.rows() != l.rows() ||
      p.cols() != l.cols())
    throw ShapeError("kl_modularity_loss: shape mismatch");
  if (!(m > 0.0)) throw DataError("kl_modularity_loss: m must be positive");
  const double trace = (p.transpose() * b * p).trace();
  return -trace / (2.0 * m) + lambda * kl_divergence(l, p);
}

void export_edge_list(const ViewGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (Index i = 0; i < graph.size(); ++i)
    for (Index j = i + 1; j < graph.size(); ++j)
      if (graph.adjacency(i, j) != 0.0) out << i << " " << j << "\n";
}

}  // namespace freecsl
