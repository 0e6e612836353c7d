#include "greenpc/pde/expression.hpp"

#include "greenpc/error.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace greenpc::pde {

enum class Op { constant, variable, add, sub, mul, div, pow, neg, sin, cos, tan, exp, log, sqrt, tanh, abs };

struct Expression::Node {
  Op op = Op::constant;
  double value = 0.0;
  int var = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::constant;
  n->value = v;
  return n;
}

NodePtr make_var(int index) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::variable;
  n->var = index;
  return n;
}

bool is_const(const NodePtr& n) { return n->op == Op::constant; }
bool is_const(const NodePtr& n, double v) { return n->op == Op::constant && n->value == v; }

double apply_unary(Op op, double a) {
  switch (op) {
    case Op::neg: return -a;
    case Op::sin: return std::sin(a);
    case Op::cos: return std::cos(a);
    case Op::tan: return std::tan(a);
    case Op::exp: return std::exp(a);
    case Op::log: return std::log(a);
    case Op::sqrt: return std::sqrt(a);
    case Op::tanh: return std::tanh(a);
    case Op::abs: return std::abs(a);
    default: break;
  }
  throw std::logic_error("not a unary op");
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::add: return a + b;
    case Op::sub: return a - b;
    case Op::mul: return a * b;
    case Op::div: return a / b;
    case Op::pow: return std::pow(a, b);
    default: break;
  }
  throw std::logic_error("not a binary op");
}

NodePtr make_unary(Op op, NodePtr a) {
  if (is_const(a)) return make_const(apply_unary(op, a->value));
  if (op == Op::neg && a->op == Op::neg) return a->lhs;
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->lhs = std::move(a);
  return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return make_const(apply_binary(op, a->value, b->value));
  switch (op) {
    case Op::add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Op::sub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make_unary(Op::neg, b);
      break;
    case Op::mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Op::div:
      if (is_const(a, 0.0)) return make_const(0.0);
      if (is_const(b, 1.0)) return a;
      break;
    case Op::pow:
      if (is_const(b, 0.0)) return make_const(1.0);
      if (is_const(b, 1.0)) return a;
      break;
    default: break;
  }
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

double eval_node(const NodePtr& n, const double* vars) {
  switch (n->op) {
    case Op::constant: return n->value;
    case Op::variable: return vars[n->var];
    case Op::add: case Op::sub: case Op::mul: case Op::div: case Op::pow:
      return apply_binary(n->op, eval_node(n->lhs, vars), eval_node(n->rhs, vars));
    default:
      return apply_unary(n->op, eval_node(n->lhs, vars));
  }
}

Eigen::ArrayXd eval_node(const NodePtr& n, const Eigen::ArrayXd* vars, Eigen::Index size) {
  switch (n->op) {
    case Op::constant: return Eigen::ArrayXd::Constant(size, n->value);
    case Op::variable: return vars[n->var];
    default: break;
  }
  if (n->rhs) {
    Eigen::ArrayXd a = eval_node(n->lhs, vars, size);
    if (n->op == Op::pow && is_const(n->rhs)) {
      const double p = n->rhs->value;
      if (p == 2.0) return a.square();
      return a.pow(p);
    }
    Eigen::ArrayXd b = eval_node(n->rhs, vars, size);
    switch (n->op) {
      case Op::add: return a + b;
      case Op::sub: return a - b;
      case Op::mul: return a * b;
      case Op::div: return a / b;
      case Op::pow: return a.pow(b);
      default: break;
    }
  }
  Eigen::ArrayXd a = eval_node(n->lhs, vars, size);
  switch (n->op) {
    case Op::neg: return -a;
    case Op::sin: return a.sin();
    case Op::cos: return a.cos();
    case Op::tan: return a.tan();
    case Op::exp: return a.exp();
    case Op::log: return a.log();
    case Op::sqrt: return a.sqrt();
    case Op::tanh: return a.tanh();
    case Op::abs: return a.abs();
    default: break;
  }
  throw std::logic_error("bad expression node");
}

NodePtr differentiate(const NodePtr& n, int var) {
  const auto& u = n->lhs;
  const auto& v = n->rhs;
  switch (n->op) {
    case Op::constant: return make_const(0.0);
    case Op::variable: return make_const(n->var == var ? 1.0 : 0.0);
    case Op::add: return make_binary(Op::add, differentiate(u, var), differentiate(v, var));
    case Op::sub: return make_binary(Op::sub, differentiate(u, var), differentiate(v, var));
    case Op::mul:
      return make_binary(Op::add, make_binary(Op::mul, differentiate(u, var), v),
                         make_binary(Op::mul, u, differentiate(v, var)));
    case Op::div: {
      // (u'v - uv') / v^2
      auto num = make_binary(Op::sub, make_binary(Op::mul, differentiate(u, var), v),
                             make_binary(Op::mul, u, differentiate(v, var)));
      return make_binary(Op::div, num, make_binary(Op::pow, v, make_const(2.0)));
    }
    case Op::pow: {
      auto du = differentiate(u, var);
      auto dv = differentiate(v, var);
      // d(u^v) = v u^(v-1) u' + u^v log(u) v'
      auto first = make_binary(
          Op::mul, make_binary(Op::mul, v, make_binary(Op::pow, u, make_binary(Op::sub, v, make_const(1.0)))), du);
      if (is_const(dv, 0.0)) return first;
      auto second = make_binary(Op::mul, make_binary(Op::mul, n, make_unary(Op::log, u)), dv);
      return make_binary(Op::add, first, second);
    }
    case Op::neg: return make_unary(Op::neg, differentiate(u, var));
    default: break;
  }
  auto du = differentiate(u, var);
  if (is_const(du, 0.0)) return du;
  NodePtr outer;
  switch (n->op) {
    case Op::sin: outer = make_unary(Op::cos, u); break;
    case Op::cos: outer = make_unary(Op::neg, make_unary(Op::sin, u)); break;
    case Op::tan:
      outer = make_binary(Op::add, make_const(1.0), make_binary(Op::pow, n, make_const(2.0)));
      break;
    case Op::exp: outer = n; break;
    case Op::log: outer = make_binary(Op::div, make_const(1.0), u); break;
    case Op::sqrt: outer = make_binary(Op::div, make_const(0.5), n); break;
    case Op::tanh:
      outer = make_binary(Op::sub, make_const(1.0), make_binary(Op::pow, n, make_const(2.0)));
      break;
    case Op::abs: outer = make_binary(Op::div, u, n); break;
    default: throw std::logic_error("bad expression node");
  }
  return make_binary(Op::mul, outer, du);
}

bool depends(const NodePtr& n, int var) {
  if (n->op == Op::variable) return n->var == var;
  if (n->op == Op::constant) return false;
  return depends(n->lhs, var) || (n->rhs && depends(n->rhs, var));
}

const char* op_name(Op op) {
  switch (op) {
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::tan: return "tan";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::sqrt: return "sqrt";
    case Op::tanh: return "tanh";
    case Op::abs: return "abs";
    case Op::add: return "+";
    case Op::sub: return "-";
    case Op::mul: return "*";
    case Op::div: return "/";
    case Op::pow: return "^";
    default: return "?";
  }
}

void print(const NodePtr& n, std::ostream& os) {
  static const char* names[] = {"x1", "x2", "theta"};
  switch (n->op) {
    case Op::constant: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << n->value;
      os << tmp.str();
      return;
    }
    case Op::variable: os << names[n->var]; return;
    case Op::neg: os << "(-"; print(n->lhs, os); os << ")"; return;
    default: break;
  }
  if (n->rhs) {
    os << "(";
    print(n->lhs, os);
    os << " " << op_name(n->op) << " ";
    print(n->rhs, os);
    os << ")";
  } else {
    os << op_name(n->op) << "(";
    print(n->lhs, os);
    os << ")";
  }
}

class Parser {
public:
  Parser(const std::string& text, const std::map<std::string, double>& constants)
      : text_(text), constants_(constants) {}

  NodePtr parse() {
    NodePtr n = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return n;
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + text_ + "': " + what + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_sum() {
    NodePtr n = parse_product();
    for (;;) {
      if (accept('+')) n = make_binary(Op::add, n, parse_product());
      else if (accept('-')) n = make_binary(Op::sub, n, parse_product());
      else return n;
    }
  }

  NodePtr parse_product() {
    NodePtr n = parse_unary();
    for (;;) {
      if (accept('*')) n = make_binary(Op::mul, n, parse_unary());
      else if (accept('/')) n = make_binary(Op::div, n, parse_unary());
      else return n;
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return make_unary(Op::neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return make_binary(Op::pow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (accept('(')) {
      NodePtr n = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make_const(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      const std::string name = text_.substr(start, pos_ - start);
      static const std::map<std::string, Op> functions = {
          {"sin", Op::sin}, {"cos", Op::cos}, {"tan", Op::tan}, {"exp", Op::exp}, {"log", Op::log},
          {"sqrt", Op::sqrt}, {"tanh", Op::tanh}, {"abs", Op::abs}};
      if (auto it = functions.find(name); it != functions.end()) {
        if (!accept('(')) fail("expected '(' after " + name);
        NodePtr arg = parse_sum();
        if (!accept(')')) fail("expected ')'");
        return make_unary(it->second, arg);
      }
      if (name == "x" || name == "x1") return make_var(0);
      if (name == "x2") return make_var(1);
      if (name == "theta") return make_var(2);
      if (name == "pi") return make_const(std::numbers::pi);
      if (name == "e") return make_const(std::numbers::e);
      if (auto it = constants_.find(name); it != constants_.end()) return make_const(it->second);
      fail("unknown identifier '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& text_;
  const std::map<std::string, double>& constants_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : node_(make_const(0.0)) {}
Expression::Expression(double value) : node_(make_const(value)) {}

Expression Expression::parse(const std::string& text, const std::map<std::string, double>& constants) {
  return Expression(Parser(text, constants).parse());
}

Expression Expression::variable(Variable v) { return Expression(make_var(static_cast<int>(v))); }

double Expression::eval(double x1, double x2, double theta) const {
  const double vars[kVariableCount] = {x1, x2, theta};
  return eval_node(node_, vars);
}

Eigen::ArrayXd Expression::eval(const Eigen::ArrayXd& x1, const Eigen::ArrayXd& x2,
                                const Eigen::ArrayXd& theta) const {
  const Eigen::ArrayXd vars[kVariableCount] = {x1, x2, theta};
  return eval_node(node_, vars, x1.size());
}

Expression Expression::derivative(Variable v) const {
  return Expression(differentiate(node_, static_cast<int>(v)));
}

bool Expression::is_constant() const { return node_->op == Op::constant; }
bool Expression::is_zero() const { return is_const(node_, 0.0); }
double Expression::constant_value() const { return node_->value; }
bool Expression::depends_on(Variable v) const { return depends(node_, static_cast<int>(v)); }

std::string Expression::to_string() const {
  std::ostringstream os;
  print(node_, os);
  return os.str();
}

Expression operator+(const Expression& a, const Expression& b) {
  return Expression(make_binary(Op::add, a.node_, b.node_));
}
Expression operator-(const Expression& a, const Expression& b) {
  return Expression(make_binary(Op::sub, a.node_, b.node_));
}
Expression operator*(const Expression& a, const Expression& b) {
  return Expression(make_binary(Op::mul, a.node_, b.node_));
}
Expression operator/(const Expression& a, const Expression& b) {
  return Expression(make_binary(Op::div, a.node_, b.node_));
}
Expression Expression::operator-() const { return Expression(make_unary(Op::neg, node_)); }

}  // namespace greenpc::pde
