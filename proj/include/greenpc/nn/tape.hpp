#pragma once

#include <Eigen/Core>

#include <deque>
#include <functional>
#include <initializer_list>
#include <vector>

namespace greenpc::nn {

using Matrix = Eigen::MatrixXd;

/// Handle to a node on a Tape.
class Var {
public:
  Var() = default;
  int id() const { return id_; }
  bool valid() const { return id_ >= 0; }

private:
  friend class Tape;
  explicit Var(int id) : id_(id) {}
  int id_ = -1;
};

/// Reverse-mode tape over dense matrices.
///
/// Nodes are appended in evaluation order, so the reverse sweep is a plain
/// backwards loop. A tape constructed with `record = false` stores values
/// only and never builds backward closures.
class Tape {
public:
  using Backward = std::function<void(Tape&, int self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var variable(Matrix value);

  const Matrix& value(Var v) const { return value(v.id()); }
  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id())].requires_grad; }

  /// Gradient buffer, zero-initialized on first access.
  Matrix& grad(Var v);
  Matrix& grad(int id) { return grad(Var(id)); }

  /// Seeds d(root)/d(root) = 1 (root must be 1x1) and sweeps backwards.
  void backward(Var root);

  /// Appends an op result. The closure is kept only if some input requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Matrix value, const std::vector<Var>& inputs, Backward backward);

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::deque<Node> nodes_;
  bool record_;
};

/// Column layout of a batch of jets: `streams()` consecutive blocks of B
/// columns holding the value, the x-gradient components and the upper
/// triangle of the x-Hessian (row-major, p <= q).
struct JetLayout {
  int dim = 1;
  int order = 0;  // 0, 1 or 2

  int streams() const { return 1 + (order >= 1 ? dim : 0) + (order >= 2 ? dim * (dim + 1) / 2 : 0); }
  int grad_stream(int p) const { return 1 + p; }
  int hess_stream(int p, int q) const {
    if (p > q) std::swap(p, q);
    return 1 + dim + p * dim - p * (p - 1) / 2 + (q - p);
  }
};

// ---- ops -------------------------------------------------------------------

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);  // elementwise, same shape
Var scale(Tape& t, Var a, double factor);
Var add_constant(Tape& t, Var a, double c);
Var exp(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var softplus(Tape& t, Var a);

/// W X with the bias added to the first `value_cols` columns only.
Var linear(Tape& t, Var W, Var b, Var X, Eigen::Index value_cols);

/// tanh applied to a jet batch, propagating first and second x-derivatives.
Var tanh_jet(Tape& t, Var X, const JetLayout& layout, Eigen::Index B);

/// Multiplies every stream block of X (rows x S*B) by the row vector r (1 x B).
Var scale_streams(Tape& t, Var X, Var r, Eigen::Index B);

/// Column-wise softmax of a Q x B logit matrix.
Var softmax_rows(Tape& t, Var logits);

Var row(Tape& t, Var X, Eigen::Index i);
Var slice_cols(Tape& t, Var X, Eigen::Index start, Eigen::Index count);

/// Sum over streams of C(s, b) * X(0, s*B + b); X is 1 x S*B, C is S x B.
Var contract_streams(Tape& t, Var X, const Matrix& C);

/// Branch body input jet: rows [disp * inv_scale ; extra], with the x-gradient
/// stream p carrying inv_scale in row p (d(x - y)/dx = I).
Var branch_input(Tape& t, const Matrix& disp, const Matrix& extra, Var inv_scale, const JetLayout& layout);

/// Mean of (X - target)^2 over all entries, as a 1x1 node.
Var mean_squared_error(Tape& t, Var X, const Matrix& target);

/// Mean negative log-likelihood of column-wise softmax(logits) at `labels`.
Var softmax_cross_entropy(Tape& t, Var logits, const std::vector<int>& labels);

/// sum_k w_k * s_k for 1x1 nodes.
Var weighted_sum(Tape& t, const std::vector<std::pair<double, Var>>& terms);

}  // namespace greenpc::nn
