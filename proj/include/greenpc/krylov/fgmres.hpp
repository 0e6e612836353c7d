#pragma once

#include "greenpc/pde/sparse_matrix.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace greenpc::krylov {

/// A square linear map given by its action on vectors.
struct LinearOperator {
  Eigen::Index n = 0;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> apply;

  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(n);
    apply(v, out);
    return out;
  }
};

LinearOperator identity_operator(Eigen::Index n);
/// The operators below share ownership of their matrix.
LinearOperator dense_operator(std::shared_ptr<const Eigen::MatrixXd> matrix);
LinearOperator dense_operator(Eigen::MatrixXd matrix);
LinearOperator sparse_operator(std::shared_ptr<const SparseMatrix> matrix);
LinearOperator sparse_operator(SparseMatrix matrix);

struct SolveOptions {
  int restart = 50;
  double tol = 1e-6;
  int max_iterations = 500;
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  int restart = 50;
  double seconds = 0.0;
  /// Relative residual before the first iteration and after each one.
  std::vector<double> history;
  /// Indices into `history` where a restart cycle began.
  std::vector<int> cycle_starts;

  /// Iteration count, or "F" when the cap was reached.
  std::string status() const { return converged ? std::to_string(iterations) : "F"; }
};

struct SolveResult {
  Eigen::VectorXd x;
  SolveReport report;
};

/// Restarted flexible GMRES with right preconditioning.
///
/// The preconditioner may change between applications; the preconditioned
/// directions are stored explicitly. Convergence is declared on the true
/// relative residual |b - A x| / |b|. Throws BreakdownError when the Krylov
/// space becomes invariant without reaching the tolerance.
SolveResult fgmres(const LinearOperator& A, const LinearOperator* preconditioner, const Eigen::VectorXd& b,
                   const SolveOptions& options = {}, const std::optional<Eigen::VectorXd>& x0 = std::nullopt);

/// Uniform(-0.5, 0.5) entries from a seeded stream.
Eigen::VectorXd make_rhs(Eigen::Index n, std::uint64_t seed);

/// "iteration,relres" rows.
void write_history_csv(const SolveReport& report, std::ostream& os);

}  // namespace greenpc::krylov
