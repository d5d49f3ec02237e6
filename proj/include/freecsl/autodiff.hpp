// autodiff.hpp - reverse-mode automatic differentiation over dense matrices.
// A Tape records a DAG of matrix operations; backward() walks it in reverse,
// accumulating gradients into every node that the loss depends on.
#pragma once

#include <vector>

#include "freecsl/common.hpp"

namespace freecsl::ad {

enum class Op {
  kConst,
  kParam,
  kMatMul,        // A B
  kAdd,           // A + B (same shape)
  kAddRowVec,     // A + 1 b  (b broadcast over rows)
  kSub,           // A - B
  kCwiseMul,      // A .* B
  kScale,         // s A
  kRelu,          // max(A, 0)
  kRowNormalize,  // rows scaled to unit L2 norm; zero rows -> uniform 1/sqrt(d)
  kSoftmaxRows,
  kLogSoftmaxRows,
  kCwiseMaxConst, // max(A, s) elementwise
  kGatherRows,    // rows of A selected by an index list
  kSum,           // 1x1 total
};

class Tape {
 public:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double scalar = 0.0;
    std::vector<Index> rows;  // kGatherRows only
    Matrix value;
    Matrix grad;  // empty until touched by backward
  };

  int constant(Matrix v) { return push({Op::kConst, -1, -1, 0.0, {}, std::move(v), {}}); }

  // Leaf bound to an externally owned parameter. The caller keeps the
  // parameter alive for the lifetime of the tape.
  int param(const Matrix& p) {
    if (!p.allFinite()) throw TrainingError("non-finite parameter tensor");
    return push({Op::kParam, -1, -1, 0.0, {}, p, {}});
  }

  int matmul(int a, int b) {
    if (val(a).cols() != val(b).rows()) throw ShapeError("matmul: inner dimension mismatch");
    return push({Op::kMatMul, a, b, 0.0, {}, val(a) * val(b), {}});
  }

  int add(int a, int b) {
    check_same_shape(a, b, "add");
    return push({Op::kAdd, a, b, 0.0, {}, val(a) + val(b), {}});
  }

  int add_rowvec(int a, int b) {
    if (val(b).rows() != 1 || val(a).cols() != val(b).cols())
      throw ShapeError("add_rowvec: bias must be 1 x cols(A)");
    return push({Op::kAddRowVec, a, b, 0.0, {},
                 val(a).rowwise() + val(b).row(0), {}});
  }

  int sub(int a, int b) {
    check_same_shape(a, b, "sub");
    return push({Op::kSub, a, b, 0.0, {}, val(a) - val(b), {}});
  }

  int cwise_mul(int a, int b) {
    check_same_shape(a, b, "cwise_mul");
    return push({Op::kCwiseMul, a, b, 0.0, {}, val(a).cwiseProduct(val(b)), {}});
  }

  int scale(int a, double s) {
    return push({Op::kScale, a, -1, s, {}, s * val(a), {}});
  }

  int relu(int a) {
    return push({Op::kRelu, a, -1, 0.0, {}, val(a).cwiseMax(0.0), {}});
  }

  int row_normalize(int a) {
    Matrix y = val(a);
    const double uniform = 1.0 / std::sqrt(double(y.cols()));
    for (Index i = 0; i < y.rows(); ++i) {
      const double norm = y.row(i).norm();
      if (norm > 0.0)
        y.row(i) /= norm;
      else
        y.row(i).setConstant(uniform);
    }
    return push({Op::kRowNormalize, a, -1, 0.0, {}, std::move(y), {}});
  }

  int softmax_rows(int a) {
    Matrix y = val(a);
    for (Index i = 0; i < y.rows(); ++i) {
      y.row(i) = (y.row(i).array() - y.row(i).maxCoeff()).exp();
      y.row(i) /= y.row(i).sum();
    }
    return push({Op::kSoftmaxRows, a, -1, 0.0, {}, std::move(y), {}});
  }

  int log_softmax_rows(int a) {
    Matrix y = val(a);
    for (Index i = 0; i < y.rows(); ++i) {
      const double mx = y.row(i).maxCoeff();
      const double lse = mx + std::log((y.row(i).array() - mx).exp().sum());
      y.row(i).array() -= lse;
    }
    return push({Op::kLogSoftmaxRows, a, -1, 0.0, {}, std::move(y), {}});
  }

  int cwise_max_const(int a, double s) {
    return push({Op::kCwiseMaxConst, a, -1, s, {}, val(a).cwiseMax(s), {}});
  }

  int gather_rows(int a, std::vector<Index> rows) {
    Matrix y(rows.size(), val(a).cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r] < 0 || rows[r] >= val(a).rows())
        throw ShapeError("gather_rows: index out of range");
      y.row(r) = val(a).row(rows[r]);
    }
    return push({Op::kGatherRows, a, -1, 0.0, std::move(rows), std::move(y), {}});
  }

  int sum(int a) {
    Matrix y(1, 1);
    y(0, 0) = val(a).sum();
    return push({Op::kSum, a, -1, 0.0, {}, std::move(y), {}});
  }

  const Matrix& val(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  double scalar_value(int id) const {
    if (val(id).size() != 1) throw ShapeError("node is not a scalar");
    return val(id)(0, 0);
  }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and propagates gradients to every ancestor.
  // The loss must be a finite 1x1 node.
  void backward(int loss_id);

 private:
  int push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size() - 1);
  }

  void check_same_shape(int a, int b, const char* what) const {
    if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
      throw ShapeError(std::string(what) + ": shape mismatch");
  }

  void accumulate(int id, const Matrix& g) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  std::vector<Node> nodes_;
};

inline void Tape::backward(int loss_id) {
  if (val(loss_id).size() != 1) throw ShapeError("backward: loss must be a scalar node");
  if (!std::isfinite(scalar_value(loss_id)))
    throw TrainingError("backward: loss is not finite");
  nodes_[loss_id].grad = Matrix::Ones(1, 1);

  for (int id = loss_id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::kConst:
      case Op::kParam:
        break;
      case Op::kMatMul:
        accumulate(n.a, g * val(n.b).transpose());
        accumulate(n.b, val(n.a).transpose() * g);
        break;
      case Op::kAdd:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::kAddRowVec:
        accumulate(n.a, g);
        accumulate(n.b, g.colwise().sum());
        break;
      case Op::kSub:
        accumulate(n.a, g);
        accumulate(n.b, -g);
        break;
      case Op::kCwiseMul:
        accumulate(n.a, g.cwiseProduct(val(n.b)));
        accumulate(n.b, g.cwiseProduct(val(n.a)));
        break;
      case Op::kScale:
        accumulate(n.a, n.scalar * g);
        break;
      case Op::kRelu: {
        const Matrix& x = val(n.a);
        accumulate(n.a, (x.array() > 0.0).cast<double>().matrix().cwiseProduct(g));
        break;
      }
      case Op::kRowNormalize: {
        // y = x / |x|; dx = (dy - (dy . y) y) / |x|; zero rows get no gradient
        const Matrix& x = val(n.a);
        Matrix gx = Matrix::Zero(x.rows(), x.cols());
        for (Index i = 0; i < x.rows(); ++i) {
          const double norm = x.row(i).norm();
          if (norm > 0.0) {
            const double dot = g.row(i).dot(n.value.row(i));
            gx.row(i) = (g.row(i) - dot * n.value.row(i)) / norm;
          }
        }
        accumulate(n.a, gx);
        break;
      }
      case Op::kSoftmaxRows: {
        // dx_i = y_i .* (dy_i - <dy_i, y_i>)
        Matrix gx(n.value.rows(), n.value.cols());
        for (Index i = 0; i < n.value.rows(); ++i) {
          const double dot = g.row(i).dot(n.value.row(i));
          gx.row(i) = n.value.row(i).cwiseProduct((g.row(i).array() - dot).matrix());
        }
        accumulate(n.a, gx);
        break;
      }
      case Op::kLogSoftmaxRows: {
        // dx_i = dy_i - softmax(x_i) * sum(dy_i)
        Matrix gx(n.value.rows(), n.value.cols());
        for (Index i = 0; i < n.value.rows(); ++i) {
          const double total = g.row(i).sum();
          gx.row(i) = g.row(i) - total * n.value.row(i).array().exp().matrix();
        }
        accumulate(n.a, gx);
        break;
      }
      case Op::kCwiseMaxConst: {
        const Matrix& x = val(n.a);
        accumulate(n.a, (x.array() > n.scalar).cast<double>().matrix().cwiseProduct(g));
        break;
      }
      case Op::kGatherRows: {
        Matrix gx = Matrix::Zero(val(n.a).rows(), val(n.a).cols());
        for (std::size_t r = 0; r < n.rows.size(); ++r) gx.row(n.rows[r]) += g.row(r);
        accumulate(n.a, gx);
        break;
      }
      case Op::kSum:
        accumulate(n.a, Matrix::Constant(val(n.a).rows(), val(n.a).cols(), g(0, 0)));
        break;
    }
  }
}

}  // namespace freecsl::ad
