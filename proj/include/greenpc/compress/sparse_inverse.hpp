#pragma once

#include "greenpc/compress/kernel.hpp"
#include "greenpc/pde/sparse_matrix.hpp"

#include <string>

namespace greenpc::compress {

/// rho_i = max over |x_i - x_j| > r of |K(i, j)| (0 when no point lies beyond r).
Eigen::VectorXd decay_ratio(const KernelSource& kernel, double r);

enum class Format { sparse, hmatrix };
std::string to_string(Format f);

struct FormatDecision {
  Format format = Format::hmatrix;
  bool local = false;      // max rho < tau
  bool fallback = false;   // the preferred format did not fit the budget
};

/// Sparse iff max rho < tau, provided the chosen format fits `budget` bytes;
/// falls back to the other format when only that one fits.
FormatDecision choose_format(const Eigen::VectorXd& rho, double tau, double sparse_bytes, double hmatrix_bytes,
                             double budget);

/// Threshold tau_loc scaled by the largest diagonal magnitude.
double locality_threshold(const KernelSource& kernel, double tau_rel = 1e-3);

/// Keeps, per row, the p largest-magnitude entries within radius r (ties to the smaller column).
SparseMatrix build_sparse(const KernelSource& kernel, double r, int p);

}  // namespace greenpc::compress
