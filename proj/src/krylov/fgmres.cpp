#include "greenpc/krylov/fgmres.hpp"

#include "greenpc/error.hpp"
#include "greenpc/random.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

namespace greenpc::krylov {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

LinearOperator identity_operator(Index n) {
  return {n, [](const VectorXd& v, VectorXd& out) { out = v; }};
}

LinearOperator dense_operator(std::shared_ptr<const MatrixXd> matrix) {
  if (matrix->rows() != matrix->cols()) throw SizeError("operator matrix must be square");
  const Index n = matrix->rows();
  return {n, [m = std::move(matrix)](const VectorXd& v, VectorXd& out) { out.noalias() = *m * v; }};
}

LinearOperator dense_operator(MatrixXd matrix) {
  return dense_operator(std::make_shared<const MatrixXd>(std::move(matrix)));
}

LinearOperator sparse_operator(std::shared_ptr<const SparseMatrix> matrix) {
  if (matrix->rows() != matrix->cols()) throw SizeError("operator matrix must be square");
  const Index n = matrix->rows();
  return {n, [m = std::move(matrix)](const VectorXd& v, VectorXd& out) { m->multiply(v, out); }};
}

LinearOperator sparse_operator(SparseMatrix matrix) {
  return sparse_operator(std::make_shared<const SparseMatrix>(std::move(matrix)));
}

namespace {

constexpr double kReorthogonalize = 1e-8;

// Modified Gram-Schmidt against the first `count` columns, with a second
// pass when the result is not orthogonal to working accuracy.
void orthogonalize(const MatrixXd& V, Index count, VectorXd& w, Eigen::Ref<VectorXd> h) {
  h.head(count).setZero();
  for (int pass = 0; pass < 2; ++pass) {
    for (Index i = 0; i < count; ++i) {
      const double c = V.col(i).dot(w);
      h(i) += c;
      w.noalias() -= c * V.col(i);
    }
    const double norm = w.norm();
    if (norm == 0.0) return;
    const double loss = (V.leftCols(count).transpose() * w).cwiseAbs().maxCoeff() / norm;
    if (loss <= kReorthogonalize) return;
  }
}

}  // namespace

SolveResult fgmres(const LinearOperator& A, const LinearOperator* preconditioner, const VectorXd& b,
                   const SolveOptions& options, const std::optional<VectorXd>& x0) {
  const auto start = std::chrono::steady_clock::now();
  const Index n = A.n;
  if (options.restart < 1) throw ConfigError("restart length must be at least 1");
  if (options.max_iterations < 0) throw ConfigError("max_iterations must be nonnegative");
  if (!(options.tol > 0.0)) throw ConfigError("tolerance must be positive");
  if (b.size() != n || (preconditioner && preconditioner->n != n) || (x0 && x0->size() != n))
    throw SizeError("fgmres dimensions disagree");

  SolveResult result;
  SolveReport& rep = result.report;
  rep.restart = options.restart;
  result.x = x0 ? *x0 : VectorXd::Zero(n);
  VectorXd& x = result.x;

  const double bnorm = b.norm();
  auto finish = [&]() -> SolveResult {
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return std::move(result);
  };
  if (bnorm == 0.0) {
    x.setZero();
    rep.history.push_back(0.0);
    rep.cycle_starts.push_back(0);
    rep.converged = true;
    return finish();
  }

  const int m = options.restart;
  MatrixXd V(n, m + 1), Z(n, m);
  MatrixXd H = MatrixXd::Zero(m + 1, m);
  VectorXd cs(m), sn(m), g(m + 1), w(n), r(n);

  auto true_residual = [&]() {
    A.apply(x, r);
    r = b - r;
    return r.norm() / bnorm;
  };

  double relres = true_residual();
  rep.history.push_back(relres);
  rep.cycle_starts.push_back(0);
  if (relres <= options.tol) {
    rep.converged = true;
    return finish();
  }

  while (rep.iterations < options.max_iterations) {
    const double beta = relres * bnorm;
    V.col(0) = r / beta;
    g.setZero();
    g(0) = beta;
    H.setZero();

    int j = 0;
    bool breakdown = false;
    for (; j < m && rep.iterations < options.max_iterations; ++j) {
      if (preconditioner) {
        VectorXd z(n);
        preconditioner->apply(V.col(j), z);
        Z.col(j) = z;
      } else {
        Z.col(j) = V.col(j);
      }
      A.apply(Z.col(j), w);
      orthogonalize(V, j + 1, w, H.col(j));
      const double hnext = w.norm();
      H(j + 1, j) = hnext;

      for (int i = 0; i < j; ++i) {
        const double t = cs(i) * H(i, j) + sn(i) * H(i + 1, j);
        H(i + 1, j) = -sn(i) * H(i, j) + cs(i) * H(i + 1, j);
        H(i, j) = t;
      }
      const double denom = std::hypot(H(j, j), H(j + 1, j));
      if (denom == 0.0) {
        cs(j) = 1.0;
        sn(j) = 0.0;
      } else {
        cs(j) = H(j, j) / denom;
        sn(j) = H(j + 1, j) / denom;
      }
      H(j, j) = denom;
      H(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);

      ++rep.iterations;
      rep.history.push_back(std::abs(g(j + 1)) / bnorm);

      if (hnext <= 1e-14 * beta) {
        breakdown = true;
        ++j;
        break;
      }
      V.col(j + 1) = w / hnext;
      if (std::abs(g(j + 1)) / bnorm <= options.tol) {
        ++j;
        break;
      }
    }

    // Back substitution on the triangular least-squares system.
    VectorXd y = VectorXd::Zero(j);
    for (int i = j - 1; i >= 0; --i) {
      double s = g(i);
      for (int k = i + 1; k < j; ++k) s -= H(i, k) * y(k);
      if (H(i, i) == 0.0) {
        if (s != 0.0) throw BreakdownError("singular Hessenberg system in fgmres");
        y(i) = 0.0;
      } else {
        y(i) = s / H(i, i);
      }
    }
    x.noalias() += Z.leftCols(j) * y;

    relres = true_residual();
    rep.history.back() = relres;
    if (relres <= options.tol) {
      rep.converged = true;
      return finish();
    }
    if (breakdown)
      throw BreakdownError("Krylov space became invariant at relative residual " + std::to_string(relres));
    rep.cycle_starts.push_back(static_cast<int>(rep.history.size()) - 1);
  }
  return finish();
}

VectorXd make_rhs(Index n, std::uint64_t seed) {
  Rng rng(seed);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.uniform(-0.5, 0.5);
  return v;
}

void write_history_csv(const SolveReport& report, std::ostream& os) {
  os << "iteration,relres\n";
  os.precision(17);
  for (std::size_t i = 0; i < report.history.size(); ++i) os << i << ',' << report.history[i] << '\n';
}

}  // namespace greenpc::krylov
