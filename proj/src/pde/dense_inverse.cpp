#include "greenpc/pde/dense_inverse.hpp"

#include "greenpc/error.hpp"

#include <Eigen/LU>

#include <limits>

namespace greenpc::pde {

Eigen::MatrixXd dense_inverse(const Eigen::MatrixXd& A, Eigen::Index cap) {
  if (A.rows() != A.cols()) throw SizeError("dense_inverse: matrix is not square");
  if (A.rows() > cap)
    throw SizeError("dense_inverse: " + std::to_string(A.rows()) + " rows exceeds cap " + std::to_string(cap));
  const Eigen::Index n = A.rows();
  if (n == 0) return {};

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double scale = A.cwiseAbs().maxCoeff();
  if (!(pivots.minCoeff() > static_cast<double>(n) * std::numeric_limits<double>::epsilon() * scale))
    throw FactorizationError("dense_inverse: matrix is singular to working precision");

  Eigen::MatrixXd inv = lu.inverse();
  const double residual = (A * inv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-8))
    throw FactorizationError("dense_inverse: inverse residual " + std::to_string(residual) + " exceeds 1e-8");
  return inv;
}

Eigen::MatrixXd dense_inverse(const SparseMatrix& A, Eigen::Index cap) {
  if (A.rows() > cap)
    throw SizeError("dense_inverse: " + std::to_string(A.rows()) + " rows exceeds cap " + std::to_string(cap));
  return dense_inverse(A.to_dense(), cap);
}

}  // namespace greenpc::pde
