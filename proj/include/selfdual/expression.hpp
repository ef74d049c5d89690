#pragma once

#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace selfdual {

class Grid;

/// Immutable syntax tree of a coefficient expression in x (and y in 2-D).
///
///   expr   := term { ("+"|"-") term }
///   term   := factor { ("*"|"/") factor }
///   factor := base [ "^" number ]
///   base   := number | "x" | "y" | "(" expr ")" | func "(" expr ")" | "-" base
///   func   := "sin" | "cos" | "exp" | "abs"
class Expression {
 public:
  enum class Op { Number, X, Y, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Abs };

  struct Node {
    Op op;
    double value = 0.0;  // literal for Number, exponent for Pow
    std::shared_ptr<const Node> lhs, rhs;
  };

  Expression() = default;
  explicit Expression(std::shared_ptr<const Node> root, std::string source = {});

  /// Constant expression.
  static Expression constant(double c);

  double operator()(double x, double y = 0.0) const;

  /// Values at all grid nodes; throws ConfigError naming the node on a
  /// non-finite result or division by zero.
  Eigen::VectorXd evaluate(const Grid& grid) const;

  /// Fully parenthesized form; parse(to_string()) yields an equal tree.
  std::string to_string() const;
  const std::string& source() const { return source_; }
  bool uses_y() const;
  bool valid() const { return static_cast<bool>(root_); }

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

/// Parses text; dim = 1 rejects "y". Throws ConfigError with a byte offset.
Expression parse_field_expression(std::string_view text, int dim = 2);

}  // namespace selfdual
