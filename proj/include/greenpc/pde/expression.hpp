#pragma once

#include <Eigen/Core>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace greenpc::pde {

/// Variables an expression may reference. `x` is an alias of `x1`.
enum class Variable : int { x1 = 0, x2 = 1, theta = 2 };
inline constexpr int kVariableCount = 3;

/// Small symbolic expression over (x1, x2, theta) used for PDE coefficients.
///
/// Supports + - * / ^, unary minus, numeric literals, `pi`, `e`, named
/// constants bound at parse time, and sin cos tan exp log sqrt tanh abs.
/// Differentiation is symbolic; constructors fold constants so that an
/// identically-zero derivative collapses to the literal 0.
class Expression {
public:
  struct Node;

  Expression();  // literal 0
  explicit Expression(double value);

  static Expression parse(const std::string& text,
                          const std::map<std::string, double>& constants = {});
  static Expression variable(Variable v);

  double eval(double x1, double x2 = 0.0, double theta = 0.0) const;

  /// Vectorized evaluation: one array per variable, all of equal length.
  Eigen::ArrayXd eval(const Eigen::ArrayXd& x1, const Eigen::ArrayXd& x2,
                      const Eigen::ArrayXd& theta) const;

  Expression derivative(Variable v) const;

  bool is_constant() const;
  bool is_zero() const;
  double constant_value() const;  // only valid when is_constant()
  bool depends_on(Variable v) const;

  std::string to_string() const;

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator/(const Expression& a, const Expression& b);
  Expression operator-() const;

private:
  explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace greenpc::pde
