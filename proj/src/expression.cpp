#include "selfdual/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "selfdual/errors.hpp"
#include "selfdual/mesh.hpp"

namespace selfdual {

namespace {

using Op = Expression::Op;
using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Op op, double value = 0.0, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  return std::make_shared<const Expression::Node>(Expression::Node{op, value, std::move(lhs), std::move(rhs)});
}

class Parser {
 public:
  Parser(std::string_view text, int dim) : s_(text), dim_(dim) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression syntax error at byte " + std::to_string(pos_) + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = make(Op::Add, 0.0, lhs, term());
      else if (accept('-'))
        lhs = make(Op::Sub, 0.0, lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (accept('*'))
        lhs = make(Op::Mul, 0.0, lhs, factor());
      else if (accept('/'))
        lhs = make(Op::Div, 0.0, lhs, factor());
      else
        return lhs;
    }
  }

  NodePtr factor() {
    NodePtr b = base();
    if (accept('^')) {
      skip();
      return make(Op::Pow, number(), b);
    }
    return b;
  }

  double number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < s_.size() && (s_[q] == '+' || s_[q] == '-')) ++q;
      if (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) {
        pos_ = q;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    const char* first = s_.data() + start;
    const char* last = s_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (start == pos_ || ec != std::errc() || ptr != last) {
      pos_ = start;
      fail("expected a number");
    }
    return v;
  }

  NodePtr base() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return make(Op::Number, number());
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      expect(')');
      return e;
    }
    if (c == '-') {
      ++pos_;
      return make(Op::Neg, 0.0, base());
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string_view id = s_.substr(start, pos_ - start);
      if (id == "x") return make(Op::X);
      if (id == "y") {
        if (dim_ < 2) {
          pos_ = start;
          fail("identifier 'y' is not available in 1-D");
        }
        return make(Op::Y);
      }
      Op op;
      if (id == "sin")
        op = Op::Sin;
      else if (id == "cos")
        op = Op::Cos;
      else if (id == "exp")
        op = Op::Exp;
      else if (id == "abs")
        op = Op::Abs;
      else {
        pos_ = start;
        fail("unknown identifier '" + std::string(id) + "'");
      }
      expect('(');
      NodePtr arg = expr();
      expect(')');
      return make(op, 0.0, arg);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view s_;
  int dim_;
  std::size_t pos_ = 0;
};

double eval(const Expression::Node& n, double x, double y) {
  switch (n.op) {
    case Op::Number: return n.value;
    case Op::X: return x;
    case Op::Y: return y;
    case Op::Add: return eval(*n.lhs, x, y) + eval(*n.rhs, x, y);
    case Op::Sub: return eval(*n.lhs, x, y) - eval(*n.rhs, x, y);
    case Op::Mul: return eval(*n.lhs, x, y) * eval(*n.rhs, x, y);
    case Op::Div: {
      const double d = eval(*n.rhs, x, y);
      if (d == 0.0) throw ConfigError("division by zero");
      return eval(*n.lhs, x, y) / d;
    }
    case Op::Pow: return std::pow(eval(*n.lhs, x, y), n.value);
    case Op::Neg: return -eval(*n.lhs, x, y);
    case Op::Sin: return std::sin(eval(*n.lhs, x, y));
    case Op::Cos: return std::cos(eval(*n.lhs, x, y));
    case Op::Exp: return std::exp(eval(*n.lhs, x, y));
    case Op::Abs: return std::abs(eval(*n.lhs, x, y));
  }
  return 0.0;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string print(const Expression::Node& n) {
  auto bin = [&](const char* op) { return "(" + print(*n.lhs) + " " + op + " " + print(*n.rhs) + ")"; };
  auto fn = [&](const char* name) { return std::string(name) + "(" + print(*n.lhs) + ")"; };
  switch (n.op) {
    case Op::Number: return format_number(n.value);
    case Op::X: return "x";
    case Op::Y: return "y";
    case Op::Add: return bin("+");
    case Op::Sub: return bin("-");
    case Op::Mul: return bin("*");
    case Op::Div: return bin("/");
    case Op::Pow: return "(" + print(*n.lhs) + "^" + format_number(n.value) + ")";
    case Op::Neg: return "(-" + print(*n.lhs) + ")";
    case Op::Sin: return fn("sin");
    case Op::Cos: return fn("cos");
    case Op::Exp: return fn("exp");
    case Op::Abs: return fn("abs");
  }
  return {};
}

bool equal(const Expression::Node* a, const Expression::Node* b) {
  if (!a || !b) return a == b;
  if (a->op != b->op) return false;
  if ((a->op == Op::Number || a->op == Op::Pow) && a->value != b->value) return false;
  return equal(a->lhs.get(), b->lhs.get()) && equal(a->rhs.get(), b->rhs.get());
}

bool has_y(const Expression::Node* n) {
  if (!n) return false;
  return n->op == Op::Y || has_y(n->lhs.get()) || has_y(n->rhs.get());
}

}  // namespace

Expression::Expression(std::shared_ptr<const Node> root, std::string source)
    : root_(std::move(root)), source_(std::move(source)) {}

Expression Expression::constant(double c) {
  NodePtr n = make(Op::Number, std::abs(c));
  if (std::signbit(c)) n = make(Op::Neg, 0.0, n);
  Expression e(n);
  e.source_ = e.to_string();
  return e;
}

double Expression::operator()(double x, double y) const {
  if (!root_) throw ConfigError("empty expression");
  return eval(*root_, x, y);
}

Vec Expression::evaluate(const Grid& grid) const {
  if (grid.dim() < 2 && uses_y()) throw ConfigError("expression uses 'y' on a 1-D grid");
  Vec v(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const Eigen::Vector2d p = grid.point(i);
    try {
      v[i] = (*this)(p[0], p[1]);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " at node " + std::to_string(i) + " in '" + source_ + "'");
    }
    if (!std::isfinite(v[i]))
      throw ConfigError("non-finite value at node " + std::to_string(i) + " in '" + source_ + "'");
  }
  return v;
}

std::string Expression::to_string() const { return root_ ? print(*root_) : std::string(); }

bool Expression::uses_y() const { return has_y(root_.get()); }

bool operator==(const Expression& a, const Expression& b) { return equal(a.root_.get(), b.root_.get()); }

Expression parse_field_expression(std::string_view text, int dim) {
  Parser p(text, dim);
  return Expression(p.parse(), std::string(text));
}

}  // namespace selfdual
