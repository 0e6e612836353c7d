#pragma once

#include <Eigen/Core>

namespace greenpc::train {

/// Gaussian approximation of the Dirac delta: (1/(eps sqrt(pi)))^d exp(-|x-y|^2/eps^2).
struct Mollifier {
  double eps = 1e-2;
  int dim = 1;

  double peak() const;
  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  Eigen::RowVectorXd operator()(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) const;
};

}  // namespace greenpc::train
