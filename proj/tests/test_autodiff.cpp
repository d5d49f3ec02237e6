#include <cmath>
#include <functional>

#include "doctest.h"
#include "freecsl/autodiff.hpp"
#include "oracles.hpp"

using namespace freecsl;

namespace {

Matrix random_matrix(Index r, Index c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// finite-difference check of d(loss)/d(input) for a scalar graph builder
void check_grad(Matrix input, const std::function<int(ad::Tape&, int)>& build,
                double tol = 1e-6) {
  ad::Tape tape;
  const int x = tape.param(input);
  const int loss = build(tape, x);
  tape.backward(loss);
  const Matrix analytic = tape.grad(x);

  for (Index i = 0; i < input.rows(); ++i)
    for (Index j = 0; j < input.cols(); ++j) {
      const double fd = oracles::central_difference(
          [&]() {
            ad::Tape t2;
            const int x2 = t2.param(input);
            return t2.scalar_value(build(t2, x2));
          },
          input(i, j), 1e-6);
      CHECK(oracles::rel_err(analytic(i, j), fd) < tol);
    }
}

}  // namespace

TEST_CASE("backward of sum of squared params is 2x") {
  Rng rng(1);
  Matrix p = random_matrix(3, 4, rng);
  ad::Tape tape;
  const int x = tape.param(p);
  const int loss = tape.sum(tape.cwise_mul(x, x));
  tape.backward(loss);
  CHECK((tape.grad(x) - 2.0 * p).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constant loss has zero gradients") {
  Rng rng(2);
  Matrix p = random_matrix(2, 2, rng);
  ad::Tape tape;
  const int x = tape.param(p);
  const int c = tape.constant(Matrix::Ones(2, 2));
  const int loss = tape.sum(c);
  (void)x;
  tape.backward(loss);
  CHECK(tape.grad(x).size() == 0);  // loss does not reach the parameter
}

TEST_CASE("matmul gradients match finite differences") {
  Rng rng(3);
  const Matrix b = random_matrix(4, 3, rng);
  const Matrix w = random_matrix(2, 3, rng);
  check_grad(random_matrix(2, 4, rng), [&](ad::Tape& t, int x) {
    return t.sum(t.cwise_mul(t.matmul(x, t.constant(b)), t.constant(w)));
  });
}

TEST_CASE("both matmul operands receive gradients") {
  Rng rng(4);
  Matrix a = random_matrix(3, 2, rng);
  Matrix b = random_matrix(2, 5, rng);
  ad::Tape tape;
  const int na = tape.param(a);
  const int nb = tape.param(b);
  const int loss = tape.sum(tape.matmul(na, nb));
  tape.backward(loss);
  // d sum(AB) / dA = ones * B^T, / dB = A^T * ones
  const Matrix ones = Matrix::Ones(3, 5);
  CHECK((tape.grad(na) - ones * b.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((tape.grad(nb) - a.transpose() * ones).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("add_rowvec broadcasts forward and reduces backward") {
  Rng rng(5);
  Matrix a = random_matrix(4, 3, rng);
  Matrix bias = random_matrix(1, 3, rng);
  ad::Tape tape;
  const int na = tape.param(a);
  const int nb = tape.param(bias);
  const Matrix w = random_matrix(4, 3, rng);
  const int loss = tape.sum(tape.cwise_mul(tape.add_rowvec(na, nb), tape.constant(w)));
  tape.backward(loss);
  CHECK((tape.grad(na) - w).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((tape.grad(nb) - w.colwise().sum().matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("relu gradient masks negative inputs") {
  check_grad((Matrix(2, 3) << 0.5, -0.7, 1.2, -0.1, 0.9, -2.0).finished(),
             [](ad::Tape& t, int x) { return t.sum(t.relu(x)); });
}

TEST_CASE("row_normalize gradients match finite differences") {
  Rng rng(6);
  const Matrix w = random_matrix(3, 4, rng);
  check_grad(random_matrix(3, 4, rng), [&](ad::Tape& t, int x) {
    return t.sum(t.cwise_mul(t.row_normalize(x), t.constant(w)));
  });
}

TEST_CASE("row_normalize maps a zero row to the uniform unit vector with zero grad") {
  Matrix z = Matrix::Zero(1, 4);
  ad::Tape tape;
  const int x = tape.param(z);
  const int y = tape.row_normalize(x);
  CHECK((tape.val(y).array() - 0.5).abs().maxCoeff() < 1e-12);
  const int loss = tape.sum(y);
  tape.backward(loss);
  CHECK(tape.grad(x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("softmax and log_softmax gradients match finite differences") {
  Rng rng(7);
  const Matrix w = random_matrix(3, 5, rng);
  check_grad(random_matrix(3, 5, rng, -2, 2), [&](ad::Tape& t, int x) {
    return t.sum(t.cwise_mul(t.softmax_rows(x), t.constant(w)));
  });
  check_grad(random_matrix(3, 5, rng, -2, 2), [&](ad::Tape& t, int x) {
    return t.sum(t.cwise_mul(t.log_softmax_rows(x), t.constant(w)));
  });
}

TEST_CASE("softmax rows sum to one and log_softmax agrees with log(softmax)") {
  Rng rng(8);
  const Matrix x = random_matrix(4, 6, rng, -3, 3);
  ad::Tape tape;
  const int n = tape.constant(x);
  const Matrix sm = tape.val(tape.softmax_rows(n));
  const Matrix lsm = tape.val(tape.log_softmax_rows(n));
  for (Index i = 0; i < 4; ++i) CHECK(sm.row(i).sum() == doctest::Approx(1.0));
  CHECK((sm.array().log() - lsm.array()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("gather_rows forward selects and backward scatters") {
  Rng rng(9);
  Matrix a = random_matrix(5, 2, rng);
  ad::Tape tape;
  const int na = tape.param(a);
  const int g = tape.gather_rows(na, {3, 0, 3});
  CHECK((tape.val(g).row(0) - a.row(3)).cwiseAbs().maxCoeff() == 0.0);
  const int loss = tape.sum(g);
  tape.backward(loss);
  Matrix expect = Matrix::Zero(5, 2);
  expect.row(3).setConstant(2.0);  // row 3 selected twice
  expect.row(0).setConstant(1.0);
  CHECK((tape.grad(na) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cwise_max_const clamps and gates the gradient") {
  check_grad((Matrix(1, 4) << -2.0, -0.5, 0.5, 2.0).finished(),
             [](ad::Tape& t, int x) { return t.sum(t.cwise_max_const(x, -1.0)); });
}

TEST_CASE("gradients accumulate when a node feeds two consumers") {
  Rng rng(10);
  Matrix a = random_matrix(2, 2, rng);
  ad::Tape tape;
  const int na = tape.param(a);
  const int loss = tape.sum(tape.add(tape.cwise_mul(na, na), na));
  tape.backward(loss);
  const Matrix expect = 2.0 * a + Matrix::Ones(2, 2);
  CHECK((tape.grad(na) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("a chained mlp-style graph matches finite differences end to end") {
  Rng rng(11);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix w2 = random_matrix(5, 2, rng);
  check_grad(random_matrix(3, 5, rng), [&](ad::Tape& t, int w1) {
    const int h = t.relu(t.matmul(t.constant(x), w1));
    const int y = t.matmul(h, t.constant(w2));
    return t.sum(t.cwise_mul(y, y));
  });
}

TEST_CASE("backward rejects non-scalar and non-finite losses") {
  ad::Tape tape;
  const int x = tape.constant(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(tape.backward(x), ShapeError);
  const int inf = tape.constant(Matrix::Constant(1, 1, std::numeric_limits<double>::infinity()));
  CHECK_THROWS_AS(tape.backward(inf), TrainingError);
}

TEST_CASE("param nodes reject non-finite tensors") {
  ad::Tape tape;
  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(tape.param(bad), TrainingError);
}
