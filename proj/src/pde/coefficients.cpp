#include "greenpc/pde/coefficients.hpp"

#include "greenpc/error.hpp"

#include <sstream>

namespace greenpc::pde {

namespace {

constexpr double kDivergenceStep = 1e-6;

Variable axis(int p) { return p == 0 ? Variable::x1 : Variable::x2; }

}  // namespace

CoefficientField CoefficientField::from_expressions(int dim, std::vector<std::vector<Expression>> a,
                                                    std::vector<Expression> b, Expression c) {
  if (dim != 1 && dim != 2) throw ConfigError("coefficient dimension must be 1 or 2");
  if (static_cast<int>(a.size()) != dim || static_cast<int>(b.size()) != dim)
    throw ConfigError("coefficient shapes do not match dimension " + std::to_string(dim));
  for (const auto& row : a)
    if (static_cast<int>(row.size()) != dim) throw ConfigError("diffusion tensor must be dim x dim");

  CoefficientField f;
  f.dim_ = dim;
  f.a_expr_ = std::move(a);
  f.b_expr_ = std::move(b);
  f.c_expr_ = std::move(c);
  f.diagonal_ = true;
  for (int p = 0; p < dim; ++p)
    for (int q = 0; q < dim; ++q)
      if (p != q && !f.a_expr_[p][q].is_zero()) f.diagonal_ = false;

  f.div_expr_.assign(dim, {});
  for (int p = 0; p < dim; ++p) {
    Expression sum;
    for (int q = 0; q < dim; ++q) sum = sum + f.a_expr_[q][p].derivative(axis(q));
    f.div_expr_[p].push_back(sum);
  }

  auto uses_theta = [](const Expression& e) { return e.depends_on(Variable::theta); };
  for (int p = 0; p < dim; ++p) {
    f.parametric_ = f.parametric_ || uses_theta(f.b_expr_[p]);
    for (int q = 0; q < dim; ++q) f.parametric_ = f.parametric_ || uses_theta(f.a_expr_[p][q]);
  }
  f.parametric_ = f.parametric_ || uses_theta(f.c_expr_);
  return f;
}

CoefficientField CoefficientField::from_functions(int dim, TensorFn a, VectorFn b, ScalarFn c,
                                                  bool diagonal) {
  if (dim != 1 && dim != 2) throw ConfigError("coefficient dimension must be 1 or 2");
  CoefficientField f;
  f.dim_ = dim;
  f.a_fn_ = std::move(a);
  f.b_fn_ = std::move(b);
  f.c_fn_ = std::move(c);
  f.diagonal_ = diagonal;
  return f;
}

Eigen::MatrixXd CoefficientField::a(const Eigen::VectorXd& x, double theta) const {
  if (a_expr_.empty()) return a_fn_(x, theta);
  Eigen::MatrixXd out(dim_, dim_);
  const double x2 = dim_ > 1 ? x(1) : 0.0;
  for (int p = 0; p < dim_; ++p)
    for (int q = 0; q < dim_; ++q) out(p, q) = a_expr_[p][q].eval(x(0), x2, theta);
  return out;
}

Eigen::VectorXd CoefficientField::b(const Eigen::VectorXd& x, double theta) const {
  if (b_expr_.empty()) return b_fn_(x, theta);
  Eigen::VectorXd out(dim_);
  const double x2 = dim_ > 1 ? x(1) : 0.0;
  for (int p = 0; p < dim_; ++p) out(p) = b_expr_[p].eval(x(0), x2, theta);
  return out;
}

double CoefficientField::c(const Eigen::VectorXd& x, double theta) const {
  if (a_expr_.empty()) return c_fn_(x, theta);
  return c_expr_.eval(x(0), dim_ > 1 ? x(1) : 0.0, theta);
}

Eigen::VectorXd CoefficientField::div_a(const Eigen::VectorXd& x, double theta) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  if (!div_expr_.empty()) {
    const double x2 = dim_ > 1 ? x(1) : 0.0;
    for (int p = 0; p < dim_; ++p) out(p) = div_expr_[p][0].eval(x(0), x2, theta);
    return out;
  }
  for (int q = 0; q < dim_; ++q) {
    Eigen::VectorXd xp = x, xm = x;
    xp(q) += kDivergenceStep;
    xm(q) -= kDivergenceStep;
    const Eigen::MatrixXd d = (a_fn_(xp, theta) - a_fn_(xm, theta)) / (2.0 * kDivergenceStep);
    for (int p = 0; p < dim_; ++p) out(p) += d(q, p);
  }
  return out;
}

CoefficientSample CoefficientField::sample(const Eigen::MatrixXd& x, const Eigen::ArrayXd& theta,
                                           double theta_default) const {
  const Eigen::Index B = x.cols();
  CoefficientSample s;
  s.dim = dim_;
  s.a.resize(dim_ * dim_, B);
  s.div_a.resize(dim_, B);
  s.b.resize(dim_, B);
  s.c.resize(1, B);

  if (!a_expr_.empty()) {
    const Eigen::ArrayXd x1 = x.row(0).transpose().array();
    const Eigen::ArrayXd x2 = dim_ > 1 ? Eigen::ArrayXd(x.row(1).transpose().array()) : Eigen::ArrayXd::Zero(B);
    const Eigen::ArrayXd th = theta.size() == B ? theta : Eigen::ArrayXd::Constant(B, theta_default);
    for (int p = 0; p < dim_; ++p) {
      for (int q = 0; q < dim_; ++q) s.a.row(p * dim_ + q) = a_expr_[p][q].eval(x1, x2, th).transpose();
      s.div_a.row(p) = div_expr_[p][0].eval(x1, x2, th).transpose();
      s.b.row(p) = b_expr_[p].eval(x1, x2, th).transpose();
    }
    s.c.row(0) = c_expr_.eval(x1, x2, th).transpose();
    return s;
  }

  for (Eigen::Index k = 0; k < B; ++k) {
    const Eigen::VectorXd xk = x.col(k);
    const double th = theta.size() == B ? theta(k) : theta_default;
    const Eigen::MatrixXd ak = a(xk, th);
    for (int p = 0; p < dim_; ++p)
      for (int q = 0; q < dim_; ++q) s.a(p * dim_ + q, k) = ak(p, q);
    s.div_a.col(k) = div_a(xk, th).array();
    s.b.col(k) = b(xk, th).array();
    s.c(0, k) = c(xk, th);
  }
  return s;
}

std::string CoefficientField::describe() const {
  if (a_expr_.empty()) return "callback coefficients";
  std::ostringstream os;
  os << "a=[";
  for (int p = 0; p < dim_; ++p)
    for (int q = 0; q < dim_; ++q) os << (p + q ? ", " : "") << a_expr_[p][q].to_string();
  os << "] b=[";
  for (int p = 0; p < dim_; ++p) os << (p ? ", " : "") << b_expr_[p].to_string();
  os << "] c=" << c_expr_.to_string();
  return os.str();
}

namespace problems {

namespace {
Expression E(const std::string& s, const std::map<std::string, double>& k = {}) {
  return Expression::parse(s, k);
}
}  // namespace

CoefficientField poisson(int dim) {
  if (dim == 1) return CoefficientField::from_expressions(1, {{E("1")}}, {E("0")}, E("0"));
  return CoefficientField::from_expressions(2, {{E("1"), E("0")}, {E("0"), E("1")}}, {E("0"), E("0")}, E("0"));
}

CoefficientField convection_1d() {
  return CoefficientField::from_expressions(1, {{E("0.01")}}, {E("1 + x^2")}, E("0"));
}

CoefficientField reaction_1d() {
  return CoefficientField::from_expressions(1, {{E("1")}}, {E("0")}, E("-50*(1 + x^2)"));
}

CoefficientField convection_2d() {
  const auto a = E("0.01*(1 + x1^2 + x2^2)");
  return CoefficientField::from_expressions(2, {{a, E("0")}, {E("0"), a}}, {E("1 + x2^2"), E("1 + x1^2")}, E("0"));
}

CoefficientField reaction_2d() {
  return CoefficientField::from_expressions(2, {{E("1"), E("0")}, {E("0"), E("1")}}, {E("0"), E("0")},
                                            E("-10*(1 + x1^2 + x2^2)"));
}

CoefficientField rotated_laplacian(double xi) {
  const std::map<std::string, double> k = {{"xi", xi}};
  const auto a11 = E("cos(theta)^2 + xi*sin(theta)^2", k);
  const auto a12 = E("cos(theta)*sin(theta)*(1 - xi)", k);
  const auto a22 = E("sin(theta)^2 + xi*cos(theta)^2", k);
  return CoefficientField::from_expressions(2, {{a11, a12}, {a12, a22}}, {E("0"), E("0")}, E("0"));
}

CoefficientField shifted_laplacian_1d(double shift) {
  return CoefficientField::from_expressions(1, {{E("1")}}, {E("0")}, Expression(-shift));
}

}  // namespace problems

}  // namespace greenpc::pde
