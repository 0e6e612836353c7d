#pragma once

#include "greenpc/pde/expression.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace greenpc::pde {

/// Coefficients of L u = -div(a grad u) + b . grad u + c u, sampled at a batch of points.
struct CoefficientSample {
  int dim = 1;
  Eigen::ArrayXXd a;      // (dim*dim) x B, row p*dim + q
  Eigen::ArrayXXd div_a;  // dim x B, (div a)_p = sum_q d a_qp / d x_q
  Eigen::ArrayXXd b;      // dim x B
  Eigen::ArrayXXd c;      // 1 x B

  double a_at(int p, int q, Eigen::Index k) const { return a(p * dim + q, k); }
};

/// Diffusion tensor a(x), convection b(x), reaction c(x), optionally
/// parameterized by a scalar theta (the rotated-Laplacian angle).
class CoefficientField {
public:
  using TensorFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&, double)>;
  using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;
  using ScalarFn = std::function<double(const Eigen::VectorXd&, double)>;

  /// Expression-backed field; div a is derived symbolically.
  static CoefficientField from_expressions(int dim, std::vector<std::vector<Expression>> a,
                                           std::vector<Expression> b, Expression c);

  /// Callback-backed field; div a falls back to central differences (step 1e-6).
  static CoefficientField from_functions(int dim, TensorFn a, VectorFn b, ScalarFn c, bool diagonal);

  int dim() const { return dim_; }
  bool diagonal_diffusion() const { return diagonal_; }
  bool has_analytic_divergence() const { return !a_expr_.empty(); }
  bool parametric() const { return parametric_; }

  Eigen::MatrixXd a(const Eigen::VectorXd& x, double theta = 0.0) const;
  Eigen::VectorXd b(const Eigen::VectorXd& x, double theta = 0.0) const;
  double c(const Eigen::VectorXd& x, double theta = 0.0) const;
  Eigen::VectorXd div_a(const Eigen::VectorXd& x, double theta = 0.0) const;

  /// Batched evaluation at the columns of `x` (dim x B). `theta` is either
  /// empty (use `theta_default`) or holds one value per column.
  CoefficientSample sample(const Eigen::MatrixXd& x, const Eigen::ArrayXd& theta = {},
                           double theta_default = 0.0) const;

  /// Human-readable description of the coefficient expressions, if any.
  std::string describe() const;

private:
  CoefficientField() = default;

  int dim_ = 1;
  bool diagonal_ = true;
  bool parametric_ = false;
  std::vector<std::vector<Expression>> a_expr_;
  std::vector<Expression> b_expr_;
  Expression c_expr_;
  std::vector<std::vector<Expression>> div_expr_;  // dim entries (one per component)
  TensorFn a_fn_;
  VectorFn b_fn_;
  ScalarFn c_fn_;
};

/// Named model problems used by the experiments.
namespace problems {
CoefficientField poisson(int dim);
/// a = 0.01, b = 1 + x^2, c = 0.
CoefficientField convection_1d();
/// a = 1, b = 0, c = -50 (1 + x^2).
CoefficientField reaction_1d();
/// a = diag(0.01 (1 + x1^2 + x2^2)), b = (1 + x2^2, 1 + x1^2), c = 0.
CoefficientField convection_2d();
/// a = I, b = 0, c = -10 (1 + x1^2 + x2^2).
CoefficientField reaction_2d();
/// Anisotropic diffusion rotated by the parameter theta, anisotropy ratio xi.
CoefficientField rotated_laplacian(double xi);
/// 1D operator -u'' - shift u.
CoefficientField shifted_laplacian_1d(double shift);
}  // namespace problems

}  // namespace greenpc::pde
