#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "freecsl/cse.hpp"

using namespace freecsl;

namespace {

ViewGraph path_graph_4nodes() {
  // nodes 0-1 and 2-3 joined by one edge each
  ViewGraph g;
  g.adjacency = Matrix::Zero(4, 4);
  g.adjacency(0, 1) = g.adjacency(1, 0) = 1.0;
  g.adjacency(2, 3) = g.adjacency(3, 2) = 1.0;
  g.degrees = g.adjacency.rowwise().sum();
  g.edge_count = 2.0;
  return g;
}

Matrix random_stochastic(Index n, Index k, Rng& rng) {
  Matrix p(n, k);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) p(i, j) = rng.uniform(0.01, 1.0);
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

ViewGraph random_graph(Index n, Rng& rng) {
  ViewGraph g;
  g.adjacency = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (rng.uniform() < 0.35) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
  // keep it connected enough to have edges
  if (g.adjacency.sum() == 0.0) g.adjacency(0, 1) = g.adjacency(1, 0) = 1.0;
  g.degrees = g.adjacency.rowwise().sum();
  g.edge_count = g.degrees.sum() / 2.0;
  return g;
}

}  // namespace

TEST_CASE("knn_adjacency on collinear points") {
  Matrix x(3, 1);
  x << 0.0, 1.0, 3.0;
  const ViewGraph g = knn_adjacency(x, 1);
  CHECK(g.adjacency(0, 1) == 1.0);
  CHECK(g.adjacency(1, 2) == 1.0);  // 1 is 2's nearest, symmetrized
  CHECK(g.adjacency(0, 2) == 0.0);
  CHECK(g.edge_count == doctest::Approx(2.0));
  g.validate();
}

TEST_CASE("knn_adjacency links duplicates mutually with lower-index ties") {
  Matrix x(4, 2);
  x << 0, 0, 0, 0, 5, 5, 5, 5;
  const ViewGraph g = knn_adjacency(x, 1);
  CHECK(g.adjacency(0, 1) == 1.0);
  CHECK(g.adjacency(2, 3) == 1.0);
  CHECK(g.adjacency(0, 2) == 0.0);
  // node 2's candidates at equal distance 0: node 3 wins over nothing; ties
  // among {0,1} for node 2 would pick 0 first; here distances differ
}

TEST_CASE("knn_adjacency with zeta = n-1 is the complete graph") {
  Rng rng(5);
  Matrix x(6, 3);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 3; ++j) x(i, j) = rng.uniform(0, 1);
  const ViewGraph g = knn_adjacency(x, 5);
  CHECK(g.adjacency.sum() == doctest::Approx(6.0 * 5.0));
  for (Index i = 0; i < 6; ++i) CHECK(g.adjacency(i, i) == 0.0);
}

TEST_CASE("knn_adjacency rejects zeta >= n") {
  CHECK_THROWS_AS(knn_adjacency(Matrix::Zero(3, 2), 3), ConfigError);
}

TEST_CASE("knn graphs have min degree >= 1") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 2 + Index(rng.uniform_index(20));
    Matrix x(n, 2);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < 2; ++j) x(i, j) = rng.uniform(-1, 1);
    const ViewGraph g = knn_adjacency(x, 1);
    CHECK(g.degrees.minCoeff() >= 1.0);
  }
}

TEST_CASE("modularity matrix of the two-edge graph") {
  const ViewGraph g = path_graph_4nodes();
  const Matrix b = modularity_matrix(g);
  CHECK(b(0, 1) == doctest::Approx(0.75));
  CHECK(b(0, 2) == doctest::Approx(-0.25));
  CHECK(b(0, 0) == doctest::Approx(-0.25));
  CHECK((b - b.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (Index i = 0; i < 4; ++i)
    CHECK(b.row(i).sum() == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("modularity_matrix rejects edgeless graphs") {
  ViewGraph g;
  g.adjacency = Matrix::Zero(3, 3);
  g.degrees = Vector::Zero(3);
  g.edge_count = 0.0;
  CHECK_THROWS_AS(modularity_matrix(g), DataError);
}

TEST_CASE("modularity rows sum to zero on random graphs") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const ViewGraph g = random_graph(4 + Index(rng.uniform_index(17)), rng);
    const Matrix b = modularity_matrix(g);
    for (Index i = 0; i < b.rows(); ++i)
      CHECK(std::abs(b.row(i).sum()) < 1e-10);
  }
}

TEST_CASE("modularity_trace equals the explicit double sum") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 4 + Index(rng.uniform_index(17));  // up to 20
    const ViewGraph g = random_graph(n, rng);
    const Matrix p = random_stochastic(n, 3, rng);
    const Matrix b = modularity_matrix(g);
    double double_sum = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) double_sum += b(i, j) * p.row(i).dot(p.row(j));
    CHECK(modularity_trace(p, g) == doctest::Approx(double_sum).epsilon(1e-8));
    CHECK((p.transpose() * b * p).trace() == doctest::Approx(double_sum).epsilon(1e-8));
  }
}

TEST_CASE("spectral modularity of row-stochastic assignments is within [-1/2, 1]") {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 4 + Index(rng.uniform_index(12));
    const ViewGraph g = random_graph(n, rng);
    const Matrix p = random_stochastic(n, 2 + Index(rng.uniform_index(3)), rng);
    const double q = modularity_trace(p, g) / (2.0 * g.edge_count);
    CHECK(q >= -0.5 - 1e-9);
    CHECK(q <= 1.0 + 1e-9);
  }
}

TEST_CASE("component partition of the two-edge graph has modularity 1/2") {
  const ViewGraph g = path_graph_4nodes();
  Matrix p(4, 2);
  p << 1, 0, 1, 0, 0, 1, 0, 1;
  CHECK(modularity_trace(p, g) / (2.0 * g.edge_count) == doctest::Approx(0.5));
  // and the corresponding loss with lambda = 0
  const Matrix b = modularity_matrix(g);
  const Matrix l = Matrix::Constant(4, 2, 0.5);
  CHECK(kl_modularity_loss(p, b, l, 0.0, g.edge_count) == doctest::Approx(-0.5));
}

TEST_CASE("t_dist_labels splits equidistant points evenly") {
  Matrix c(2, 2);
  c << 1, 0, -1, 0;
  Matrix h(1, 2);
  h << 0, 5;
  const Matrix l = t_dist_labels(h, c, 1.0);
  CHECK(l(0, 0) == doctest::Approx(0.5));
  CHECK(l(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("t_dist_labels closed form at unit distance") {
  Matrix c(2, 1);
  c << 0, 1;
  Matrix h(1, 1);
  h << 0;
  const Matrix l = t_dist_labels(h, c, 1.0);
  CHECK(l(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(l(0, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("t_dist_labels rows sum to one") {
  Rng rng(12);
  Matrix h(9, 4), c(3, 4);
  for (Index i = 0; i < 9; ++i)
    for (Index j = 0; j < 4; ++j) h(i, j) = rng.normal();
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 4; ++j) c(i, j) = rng.normal();
  const Matrix l = t_dist_labels(h, c, 1.0);
  for (Index i = 0; i < 9; ++i)
    CHECK(l.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kl_modularity_loss reduces to the modularity term when L = P") {
  Rng rng(13);
  const ViewGraph g = random_graph(8, rng);
  const Matrix p = random_stochastic(8, 2, rng);
  const Matrix b = modularity_matrix(g);
  const double with_kl = kl_modularity_loss(p, b, p, 3.0, g.edge_count);
  const double without = -modularity_trace(p, g) / (2.0 * g.edge_count);
  CHECK(with_kl == doctest::Approx(without).epsilon(1e-12));
}

TEST_CASE("KL term is nonnegative and zero only at equality") {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix l = random_stochastic(5, 3, rng);
    const Matrix p = random_stochastic(5, 3, rng);
    CHECK(kl_divergence(l, p) >= -1e-12);
    CHECK(kl_divergence(l, l) == doctest::Approx(0.0).epsilon(1e-12));
    if ((l - p).cwiseAbs().maxCoeff() > 1e-3) CHECK(kl_divergence(l, p) > 0.0);
  }
}

TEST_CASE("kl_modularity_loss is invariant under node permutation") {
  Rng rng(15);
  const Index n = 7;
  const ViewGraph g = random_graph(n, rng);
  const Matrix p = random_stochastic(n, 3, rng);
  const Matrix l = random_stochastic(n, 3, rng);
  const Matrix b = modularity_matrix(g);
  const double base = kl_modularity_loss(p, b, l, 0.7, g.edge_count);

  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index(0));
  rng.shuffle(perm);
  Matrix pp(n, 3), lp(n, 3), bp(n, n);
  for (Index i = 0; i < n; ++i) {
    pp.row(i) = p.row(perm[i]);
    lp.row(i) = l.row(perm[i]);
    for (Index j = 0; j < n; ++j) bp(i, j) = b(perm[i], perm[j]);
  }
  CHECK(kl_modularity_loss(pp, bp, lp, 0.7, g.edge_count) ==
        doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("edge list export writes one line per undirected edge") {
  const ViewGraph g = path_graph_4nodes();
  const auto path = std::filesystem::temp_directory_path() / "freecsl_edges.txt";
  export_edge_list(g, path.string());
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  CHECK(lines == std::vector<std::string>{"0 1", "2 3"});
}
