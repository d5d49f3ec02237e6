#include <cmath>

#include "doctest.h"
#include "freecsl/csl.hpp"
#include "oracles.hpp"

using namespace freecsl;

namespace {

Matrix unit_rows(Index n, Index d, Rng& rng) {
  Matrix h(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) h(i, j) = rng.normal();
    h.row(i) /= h.row(i).norm();
  }
  return h;
}

Matrix random_dist(Index n, Index k, Rng& rng) {
  Matrix m(n, k);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) m(i, j) = rng.uniform(0.01, 1.0);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

}  // namespace

TEST_CASE("soft_assign is uniform over identical prototypes") {
  Matrix h(3, 2);
  h << 1, 0, 0, 1, 0.6, 0.8;
  Matrix c(4, 2);
  c << 0.6, 0.8, 0.6, 0.8, 0.6, 0.8, 0.6, 0.8;
  const Matrix p = soft_assign(h, c, 0.5);
  CHECK((p.array() - 0.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("soft_assign closed form on orthonormal prototypes") {
  Matrix c(2, 2);
  c << 1, 0, 0, 1;
  Matrix h(1, 2);
  h << 1, 0;
  const Matrix p = soft_assign(h, c, 1.0);
  const double e = std::exp(1.0);
  CHECK(p(0, 0) == doctest::Approx(e / (e + 1)).epsilon(1e-9));
  CHECK(p(0, 1) == doctest::Approx(1 / (e + 1)).epsilon(1e-9));
  CHECK(p(0, 0) == doctest::Approx(0.7311).epsilon(1e-4));
}

TEST_CASE("soft_assign sharpens to the matching prototype at low temperature") {
  Matrix c(3, 3);
  c << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  Matrix h(1, 3);
  h << 0, 0, 1;
  const Matrix p = soft_assign(h, c, 0.01);
  // closed-form bound exp(1/tau) / (exp(1/tau) + K - 1)
  CHECK(p(0, 2) > 0.999);
}

TEST_CASE("soft_assign rows sum to one; adding a constant to scores is a no-op") {
  Rng rng(3);
  const Matrix h = unit_rows(20, 4, rng);
  const Matrix c = unit_rows(3, 4, rng);
  const Matrix p = soft_assign(h, c, 0.2);
  for (Index i = 0; i < p.rows(); ++i)
    CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.minCoeff() >= 0.0);
  // softmax of shifted scores, computed independently, must agree
  const Matrix scores = (h * c.transpose()) / 0.2;
  Matrix p_shift(scores.rows(), scores.cols());
  for (Index i = 0; i < scores.rows(); ++i) {
    p_shift.row(i) = (scores.row(i).array() + 1000.0 -
                      (scores.row(i).maxCoeff() + 1000.0)).exp();
    p_shift.row(i) /= p_shift.row(i).sum();
  }
  CHECK((p - p_shift).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("soft_assign rejects non-positive temperature") {
  CHECK_THROWS_AS(soft_assign(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 0.0),
                  ConfigError);
}

TEST_CASE("sinkhorn on a uniform score matrix returns a uniform plan") {
  const Matrix scores = Matrix::Constant(5, 4, 0.3);
  const Matrix q = sinkhorn_plan(scores, 0.5, 10);
  CHECK((q.array() - 1.0 / 20.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("sinkhorn marginals converge to uniform") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Index b = 2 + Index(rng.uniform_index(6));
    const Index k = 2 + Index(rng.uniform_index(4));
    Matrix s(b, k);
    for (Index i = 0; i < b; ++i)
      for (Index j = 0; j < k; ++j) s(i, j) = rng.uniform(-1, 1);
    const Matrix q = sinkhorn_plan(s, 0.5, 30);
    for (Index i = 0; i < b; ++i)
      CHECK(q.row(i).sum() == doctest::Approx(1.0 / double(b)).epsilon(1e-6));
    for (Index j = 0; j < k; ++j)
      CHECK(q.col(j).sum() == doctest::Approx(1.0 / double(k)).epsilon(1e-6));
    CHECK(q.minCoeff() >= 0.0);
  }
}

TEST_CASE("sinkhorn matches the grid-search maximizer on the 2x2 identity scores") {
  Matrix s(2, 2);
  s << 1, 0, 0, 1;
  const Matrix plan = sinkhorn_plan(s, 0.5, 200);
  const double grid = oracles::grid_search_transport_max(s, 0.5);
  CHECK(transport_objective(plan, s, 0.5) == doctest::Approx(grid).epsilon(1e-6));
  // and the plan itself sits within 1e-3 of the grid maximizer
  double best_t = 0.0, best = -1e300;
  for (int step = 0; step <= 5000; ++step) {
    const double t = 0.5 * step / 5000.0;
    Matrix q(2, 2);
    q << t, 0.5 - t, 0.5 - t, t;
    const double v = oracles::transport_obj(q, s, 0.5);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  CHECK(std::abs(plan(0, 0) - best_t) < 1e-3);
}

TEST_CASE("sinkhorn labels rows sum to one") {
  Rng rng(9);
  const Matrix h = unit_rows(7, 3, rng);
  const Matrix c = unit_rows(2, 3, rng);
  const Matrix q = sinkhorn_labels(h, c, 0.5, 10);
  for (Index i = 0; i < q.rows(); ++i)
    CHECK(q.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(q.minCoeff() >= 0.0);
}

TEST_CASE("large smoothness drives the labels toward uniform") {
  Rng rng(11);
  const Matrix h = unit_rows(12, 5, rng);
  const Matrix c = unit_rows(4, 5, rng);
  const Matrix q = sinkhorn_labels(h, c, 100.0, 30);
  CHECK((q.array() - 0.25).abs().maxCoeff() < 1e-2);
}

TEST_CASE("sinkhorn rejects non-finite scores") {
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sinkhorn_plan(s, 0.5, 5), Error);
}

TEST_CASE("swapped_kd_pair equals 2 ln 2 on uniform distributions") {
  const Matrix u = Matrix::Constant(6, 2, 0.5);
  const KdLoss loss = swapped_kd_pair(u, u, u, u);
  CHECK(!loss.empty_pairing);
  CHECK(loss.value == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("swapped_kd_pair vanishes in the matched one-hot limit") {
  Matrix p = Matrix::Constant(4, 3, 1e-12);
  Matrix q = Matrix::Zero(4, 3);
  for (Index i = 0; i < 4; ++i) {
    p(i, 1) = 1.0 - 2e-12;
    q(i, 1) = 1.0;
  }
  const KdLoss loss = swapped_kd_pair(p, q, p, q);
  CHECK(loss.value == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("swapped_kd_pair is symmetric in the view roles") {
  Rng rng(13);
  const Matrix pm = random_dist(5, 3, rng), pn = random_dist(5, 3, rng);
  const Matrix qm = random_dist(5, 3, rng), qn = random_dist(5, 3, rng);
  const double a = swapped_kd_pair(pm, qn, pn, qm).value;
  const double b = swapped_kd_pair(pn, qm, pm, qn).value;
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("swapped_kd_pair flags an empty pairing") {
  const Matrix empty(0, 3);
  const KdLoss loss = swapped_kd_pair(empty, empty, empty, empty);
  CHECK(loss.empty_pairing);
  CHECK(loss.value == 0.0);
}

TEST_CASE("swapped_kd_pair rejects mismatched shapes") {
  CHECK_THROWS_AS(swapped_kd_pair(Matrix::Zero(3, 2), Matrix::Zero(4, 2),
                                  Matrix::Zero(3, 2), Matrix::Zero(3, 2)),
                  ShapeError);
}

TEST_CASE("swapped_kd_pair dominates the pseudo-label entropy") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix pm = random_dist(6, 4, rng), pn = random_dist(6, 4, rng);
    const Matrix qm = random_dist(6, 4, rng), qn = random_dist(6, 4, rng);
    const double loss = swapped_kd_pair(pm, qn, pn, qm).value;
    CHECK(loss >= -1e-12);
    double entropy = 0.0;
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 4; ++j)
        entropy -= qn(i, j) * std::log(qn(i, j)) + qm(i, j) * std::log(qm(i, j));
    entropy /= 6.0;
    CHECK(loss >= entropy - 1e-9);  // cross-entropy dominates entropy per direction
  }
}
