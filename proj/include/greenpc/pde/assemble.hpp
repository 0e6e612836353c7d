#pragma once

#include "greenpc/pde/coefficients.hpp"
#include "greenpc/pde/grid.hpp"
#include "greenpc/pde/sparse_matrix.hpp"

namespace greenpc::pde {

enum class Scheme { central, upwind_convection };

struct AssemblyOptions {
  Scheme scheme = Scheme::central;
  double theta = 0.0;
  /// Multiply by the cell volume h^dim so that inv(A) approximates G(x_i, x_j).
  bool volume_scaling = true;
};

/// Finite-difference stiffness matrix on the interior nodes (homogeneous Dirichlet rows eliminated).
///
/// Diffusion is discretized in conservative form with a(x +- h/2) on the
/// axis-aligned terms; an off-diagonal tensor adds the 4 corner couplings of
/// the 9-point stencil. Convection is central or first-order upwind.
SparseMatrix assemble(const Grid& grid, const CoefficientField& coeffs, const AssemblyOptions& options = {});

inline SparseMatrix assemble(const Grid& grid, const CoefficientField& coeffs, Scheme scheme) {
  AssemblyOptions o;
  o.scheme = scheme;
  return assemble(grid, coeffs, o);
}

}  // namespace greenpc::pde
