#pragma once

#include "greenpc/pde/assemble.hpp"
#include "greenpc/pde/coefficients.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

namespace greenpc::pde {

/// Green's function samples (x, y, g) from a coarse dense inverse.
struct AnchorSet {
  int dim = 1;
  int m_coarse = 0;
  Eigen::MatrixXd x;      // dim x count
  Eigen::MatrixXd y;      // dim x count
  Eigen::VectorXd g;      // count
  Eigen::VectorXd theta;  // count, or empty when not parametric

  Eigen::Index size() const { return g.size(); }
  bool parametric() const { return theta.size() > 0; }
};

/// Anchors (x_i, x_j, inv(A)_ij) for every ordered pair of coarse interior
/// nodes; one block per parameter value when `params` is non-empty.
AnchorSet generate_anchors(const CoefficientField& coeffs, int m_coarse, Scheme scheme,
                           const std::vector<double>& params = {});

/// CSV rows "x..., y..., [theta,] g" with a header line.
void write_anchors_csv(const AnchorSet& anchors, std::ostream& os);
AnchorSet read_anchors_csv(std::istream& is);

}  // namespace greenpc::pde
