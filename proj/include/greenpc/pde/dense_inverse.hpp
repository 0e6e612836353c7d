#pragma once

#include "greenpc/pde/sparse_matrix.hpp"

#include <Eigen/Core>

namespace greenpc::pde {

inline constexpr Eigen::Index kDefaultDenseCap = 5000;

/// Explicit inverse through partially pivoted LU.
///
/// Throws SizeError above `cap` rows and FactorizationError when a pivot is
/// zero to working precision or the computed inverse fails
/// max|A inv(A) - I| <= 1e-8.
Eigen::MatrixXd dense_inverse(const Eigen::MatrixXd& A, Eigen::Index cap = kDefaultDenseCap);
Eigen::MatrixXd dense_inverse(const SparseMatrix& A, Eigen::Index cap = kDefaultDenseCap);

}  // namespace greenpc::pde
