#include "greenpc/nn/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace greenpc::nn {

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var(static_cast<int>(nodes_.size()) - 1);
}

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, record_, {}});
  return Var(static_cast<int>(nodes_.size()) - 1);
}

Matrix& Tape::grad(Var v) {
  Node& n = nodes_[static_cast<std::size_t>(v.id())];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, Backward backward) {
  bool needs = false;
  if (record_)
    for (Var in : inputs) needs = needs || requires_grad(in);
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : Backward{}});
  return Var(static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(Var root) {
  if (!record_) throw std::logic_error("backward on a non-recording tape");
  if (value(root).size() != 1) throw std::logic_error("backward root must be a scalar");
  grad(root).setOnes();
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, id);
  }
}

// ---- elementwise -------------------------------------------------------------

Var add(Tape& t, Var a, Var b) {
  return t.record(t.value(a) + t.value(b), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a)) t.grad(a) += g;
    if (t.requires_grad(b)) t.grad(b) += g;
  });
}

Var sub(Tape& t, Var a, Var b) {
  return t.record(t.value(a) - t.value(b), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a)) t.grad(a) += g;
    if (t.requires_grad(b)) t.grad(b) -= g;
  });
}

Var mul(Tape& t, Var a, Var b) {
  return t.record(t.value(a).cwiseProduct(t.value(b)), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a)) t.grad(a) += g.cwiseProduct(t.value(b));
    if (t.requires_grad(b)) t.grad(b) += g.cwiseProduct(t.value(a));
  });
}

Var scale(Tape& t, Var a, double factor) {
  return t.record(t.value(a) * factor, {a}, [a, factor](Tape& t, int self) { t.grad(a) += factor * t.grad(self); });
}

Var add_constant(Tape& t, Var a, double c) {
  return t.record((t.value(a).array() + c).matrix(), {a}, [a](Tape& t, int self) { t.grad(a) += t.grad(self); });
}

Var exp(Tape& t, Var a) {
  return t.record(t.value(a).array().exp().matrix(), {a}, [a](Tape& t, int self) {
    t.grad(a) += t.grad(self).cwiseProduct(t.value(self));
  });
}

Var sigmoid(Tape& t, Var a) {
  Matrix s = (1.0 / (1.0 + (-t.value(a).array()).exp())).matrix();
  return t.record(std::move(s), {a}, [a](Tape& t, int self) {
    const auto s = t.value(self).array();
    t.grad(a).array() += t.grad(self).array() * s * (1.0 - s);
  });
}

Var softplus(Tape& t, Var a) {
  const auto x = t.value(a).array();
  Matrix v = (x.max(0.0) + (-x.abs()).exp().log1p()).matrix();
  return t.record(std::move(v), {a}, [a](Tape& t, int self) {
    const auto sig = 1.0 / (1.0 + (-t.value(a).array()).exp());
    t.grad(a).array() += t.grad(self).array() * sig;
  });
}

// ---- layers ------------------------------------------------------------------

Var linear(Tape& t, Var W, Var b, Var X, Eigen::Index value_cols) {
  Matrix out = t.value(W) * t.value(X);
  out.leftCols(value_cols).colwise() += t.value(b).col(0);
  return t.record(std::move(out), {W, b, X}, [W, b, X, value_cols](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(W)) t.grad(W).noalias() += g * t.value(X).transpose();
    if (t.requires_grad(X)) t.grad(X).noalias() += t.value(W).transpose() * g;
    if (t.requires_grad(b)) t.grad(b).col(0) += g.leftCols(value_cols).rowwise().sum();
  });
}

Var tanh_jet(Tape& t, Var X, const JetLayout& L, Eigen::Index B) {
  const Matrix& A = t.value(X);
  const int d = L.dim;
  Matrix out(A.rows(), A.cols());
  const Eigen::ArrayXXd s = A.leftCols(B).array().tanh();
  const Eigen::ArrayXXd tt = 1.0 - s.square();
  out.leftCols(B) = s.matrix();
  if (L.order >= 1)
    for (int p = 0; p < d; ++p)
      out.middleCols(L.grad_stream(p) * B, B) = (tt * A.middleCols(L.grad_stream(p) * B, B).array()).matrix();
  if (L.order >= 2) {
    const Eigen::ArrayXXd u = -2.0 * s * tt;
    for (int p = 0; p < d; ++p)
      for (int q = p; q < d; ++q) {
        const Eigen::Index c = L.hess_stream(p, q) * B;
        out.middleCols(c, B) = (tt * A.middleCols(c, B).array() + u * A.middleCols(L.grad_stream(p) * B, B).array() *
                                                                       A.middleCols(L.grad_stream(q) * B, B).array())
                                   .matrix();
      }
  }
  return t.record(std::move(out), {X}, [X, L, B](Tape& t, int self) {
    const Matrix& A = t.value(X);
    const Matrix& g = t.grad(self);
    Matrix& gA = t.grad(X);
    const int d = L.dim;
    const Eigen::ArrayXXd s = t.value(self).leftCols(B).array();
    const Eigen::ArrayXXd tt = 1.0 - s.square();
    auto blk = [B](const Matrix& M, int stream) { return M.middleCols(stream * B, B).array(); };
    Eigen::ArrayXXd g0 = blk(g, 0) * tt;
    if (L.order >= 1) {
      const Eigen::ArrayXXd u = -2.0 * s * tt;
      for (int p = 0; p < d; ++p) {
        const int gs = L.grad_stream(p);
        g0 += blk(g, gs) * u * blk(A, gs);
        gA.middleCols(gs * B, B).array() += blk(g, gs) * tt;
      }
      if (L.order >= 2) {
        const Eigen::ArrayXXd du = -2.0 * tt.square() + 4.0 * s.square() * tt;
        for (int p = 0; p < d; ++p)
          for (int q = p; q < d; ++q) {
            const int hs = L.hess_stream(p, q);
            const int gp = L.grad_stream(p), gq = L.grad_stream(q);
            const Eigen::ArrayXXd gh = blk(g, hs);
            g0 += gh * (u * blk(A, hs) + du * blk(A, gp) * blk(A, gq));
            gA.middleCols(hs * B, B).array() += gh * tt;
            if (p == q) {
              gA.middleCols(gp * B, B).array() += 2.0 * gh * u * blk(A, gp);
            } else {
              gA.middleCols(gp * B, B).array() += gh * u * blk(A, gq);
              gA.middleCols(gq * B, B).array() += gh * u * blk(A, gp);
            }
          }
      }
    }
    gA.leftCols(B).array() += g0;
  });
}

Var scale_streams(Tape& t, Var X, Var r, Eigen::Index B) {
  const Matrix& A = t.value(X);
  const Matrix& rv = t.value(r);
  const Eigen::Index S = A.cols() / B;
  Matrix out(A.rows(), A.cols());
  for (Eigen::Index s = 0; s < S; ++s)
    out.middleCols(s * B, B) = (A.middleCols(s * B, B).array().rowwise() * rv.row(0).array()).matrix();
  return t.record(std::move(out), {X, r}, [X, r, B, S](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& A = t.value(X);
    const Matrix& rv = t.value(r);
    if (t.requires_grad(X))
      for (Eigen::Index s = 0; s < S; ++s)
        t.grad(X).middleCols(s * B, B).array() += g.middleCols(s * B, B).array().rowwise() * rv.row(0).array();
    if (t.requires_grad(r)) {
      Matrix& gr = t.grad(r);
      for (Eigen::Index s = 0; s < S; ++s)
        gr.row(0) += g.middleCols(s * B, B).cwiseProduct(A.middleCols(s * B, B)).colwise().sum();
    }
  });
}

Var softmax_rows(Tape& t, Var logits) {
  const Matrix& Lg = t.value(logits);
  Matrix P = (Lg.rowwise() - Lg.colwise().maxCoeff()).array().exp().matrix();
  P.array().rowwise() /= P.colwise().sum().array();
  return t.record(std::move(P), {logits}, [logits](Tape& t, int self) {
    const Matrix& P = t.value(self);
    const Matrix& g = t.grad(self);
    const Eigen::RowVectorXd dots = g.cwiseProduct(P).colwise().sum();
    t.grad(logits).array() += P.array() * (g.rowwise() - dots).array();
  });
}

Var row(Tape& t, Var X, Eigen::Index i) {
  return t.record(t.value(X).row(i), {X}, [X, i](Tape& t, int self) { t.grad(X).row(i) += t.grad(self); });
}

Var slice_cols(Tape& t, Var X, Eigen::Index start, Eigen::Index count) {
  return t.record(t.value(X).middleCols(start, count), {X}, [X, start, count](Tape& t, int self) {
    t.grad(X).middleCols(start, count) += t.grad(self);
  });
}

Var contract_streams(Tape& t, Var X, const Matrix& C) {
  const Eigen::Index S = C.rows(), B = C.cols();
  const Matrix& A = t.value(X);
  Matrix out = Matrix::Zero(1, B);
  for (Eigen::Index s = 0; s < S; ++s) out.row(0) += A.block(0, s * B, 1, B).cwiseProduct(C.row(s));
  return t.record(std::move(out), {X}, [X, C, S, B](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& gA = t.grad(X);
    for (Eigen::Index s = 0; s < S; ++s) gA.block(0, s * B, 1, B) += g.cwiseProduct(C.row(s));
  });
}

Var branch_input(Tape& t, const Matrix& disp, const Matrix& extra, Var inv_scale, const JetLayout& L) {
  const Eigen::Index d = disp.rows(), m = extra.rows(), B = disp.cols();
  const int S = L.streams();
  const Matrix& inv = t.value(inv_scale);
  Matrix out = Matrix::Zero(d + m, S * B);
  out.topLeftCorner(d, B) = (disp.array().rowwise() * inv.row(0).array()).matrix();
  if (m > 0) out.block(d, 0, m, B) = extra;
  if (L.order >= 1)
    for (int p = 0; p < L.dim; ++p) out.block(p, L.grad_stream(p) * B, 1, B) = inv.row(0);
  return t.record(std::move(out), {inv_scale}, [inv_scale, disp, L, d, B](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& gi = t.grad(inv_scale);
    gi.row(0) += g.topLeftCorner(d, B).cwiseProduct(disp).colwise().sum();
    if (L.order >= 1)
      for (int p = 0; p < L.dim; ++p) gi.row(0) += g.block(p, L.grad_stream(p) * B, 1, B);
  });
}

// ---- losses ------------------------------------------------------------------

Var mean_squared_error(Tape& t, Var X, const Matrix& target) {
  Matrix diff = t.value(X) - target;
  const double n = static_cast<double>(diff.size());
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  return t.record(std::move(out), {X}, [X, diff = std::move(diff), n](Tape& t, int self) {
    t.grad(X) += (2.0 * t.grad(self)(0, 0) / n) * diff;
  });
}

Var softmax_cross_entropy(Tape& t, Var logits, const std::vector<int>& labels) {
  const Matrix& Lg = t.value(logits);
  const Eigen::Index B = Lg.cols();
  if (static_cast<Eigen::Index>(labels.size()) != B) throw std::invalid_argument("label count mismatch");
  Matrix P = (Lg.rowwise() - Lg.colwise().maxCoeff()).array().exp().matrix();
  P.array().rowwise() /= P.colwise().sum().array();
  double loss = 0.0;
  for (Eigen::Index b = 0; b < B; ++b) loss -= std::log(std::max(P(labels[static_cast<std::size_t>(b)], b), 1e-300));
  Matrix out(1, 1);
  out(0, 0) = loss / static_cast<double>(B);
  return t.record(std::move(out), {logits}, [logits, P = std::move(P), labels, B](Tape& t, int self) {
    Matrix G = P;
    for (Eigen::Index b = 0; b < B; ++b) G(labels[static_cast<std::size_t>(b)], b) -= 1.0;
    t.grad(logits) += (t.grad(self)(0, 0) / static_cast<double>(B)) * G;
  });
}

Var weighted_sum(Tape& t, const std::vector<std::pair<double, Var>>& terms) {
  Matrix out = Matrix::Zero(1, 1);
  for (const auto& [w, v] : terms) out(0, 0) += w * t.value(v)(0, 0);
  std::vector<Var> inputs;
  for (const auto& term : terms) inputs.push_back(term.second);
  return t.record(std::move(out), inputs, [terms](Tape& t, int self) {
    const double g = t.grad(self)(0, 0);
    for (const auto& [w, v] : terms)
      if (t.requires_grad(v)) t.grad(v)(0, 0) += w * g;
  });
}

}  // namespace greenpc::nn
