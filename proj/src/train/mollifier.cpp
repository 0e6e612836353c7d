#include "greenpc/train/mollifier.hpp"

#include <cmath>

namespace greenpc::train {

double Mollifier::peak() const { return std::pow(1.0 / (eps * std::sqrt(M_PI)), dim); }

double Mollifier::operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  return peak() * std::exp(-(x - y).squaredNorm() / (eps * eps));
}

Eigen::RowVectorXd Mollifier::operator()(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) const {
  const Eigen::RowVectorXd r2 = (x - y).colwise().squaredNorm();
  return peak() * (-r2.array() / (eps * eps)).exp().matrix();
}

}  // namespace greenpc::train
