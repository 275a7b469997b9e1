#include "cclab/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cclab {

struct Expr::Node {
  Op op = Op::Const;
  double value = 0.0;  // constant value or integer exponent for Pow
  int var = 0;
  std::vector<Expr> args;
};

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::make(Op op, double value, int var, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = value;
  n->var = var;
  n->args = std::move(args);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::constant(double c) {
  auto n = std::make_shared<Node>();
  n->value = c;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::variable(int k) { return make(Op::Var, 0.0, k, {}); }

bool Expr::is_constant() const { return node_->op == Op::Const; }
bool Expr::is_zero() const { return is_constant() && node_->value == 0.0; }

// Constructors below fold constants so that structurally-zero brackets
// collapse to the literal 0.

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.node_->value + b.node_->value);
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return Expr::make(Expr::Op::Add, 0.0, 0, {a, b});
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.node_->value - b.node_->value);
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  return Expr::make(Expr::Op::Sub, 0.0, 0, {a, b});
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.node_->value * b.node_->value);
  if (a.is_zero() || b.is_zero()) return Expr::constant(0.0);
  if (a.is_constant() && a.node_->value == 1.0) return b;
  if (b.is_constant() && b.node_->value == 1.0) return a;
  return Expr::make(Expr::Op::Mul, 0.0, 0, {a, b});
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr::constant(-a.node_->value);
  if (a.node_->op == Expr::Op::Neg) return a.node_->args[0];
  return Expr::make(Expr::Op::Neg, 0.0, 0, {a});
}

Expr Expr::pow(const Expr& base, int exponent) {
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return base;
  if (base.is_constant()) return constant(std::pow(base.node_->value, exponent));
  return make(Op::Pow, exponent, 0, {base});
}

Expr Expr::sin(const Expr& a) {
  if (a.is_constant()) return constant(std::sin(a.node_->value));
  return make(Op::Sin, 0.0, 0, {a});
}

Expr Expr::cos(const Expr& a) {
  if (a.is_constant()) return constant(std::cos(a.node_->value));
  return make(Op::Cos, 0.0, 0, {a});
}

double Expr::eval(const Vec& x) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return x[n.var];
    case Op::Add: return n.args[0].eval(x) + n.args[1].eval(x);
    case Op::Sub: return n.args[0].eval(x) - n.args[1].eval(x);
    case Op::Mul: return n.args[0].eval(x) * n.args[1].eval(x);
    case Op::Neg: return -n.args[0].eval(x);
    case Op::Pow: {
      const double b = n.args[0].eval(x);
      const int e = static_cast<int>(n.value);
      double r = 1.0;
      for (int i = 0; i < (e < 0 ? -e : e); ++i) r *= b;
      return e < 0 ? 1.0 / r : r;
    }
    case Op::Sin: return std::sin(n.args[0].eval(x));
    case Op::Cos: return std::cos(n.args[0].eval(x));
  }
  return 0.0;
}

Expr Expr::derivative(int k) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const: return constant(0.0);
    case Op::Var: return constant(n.var == k ? 1.0 : 0.0);
    case Op::Add: return n.args[0].derivative(k) + n.args[1].derivative(k);
    case Op::Sub: return n.args[0].derivative(k) - n.args[1].derivative(k);
    case Op::Mul:
      return n.args[0].derivative(k) * n.args[1] + n.args[0] * n.args[1].derivative(k);
    case Op::Neg: return -n.args[0].derivative(k);
    case Op::Pow: {
      const int e = static_cast<int>(n.value);
      return constant(e) * pow(n.args[0], e - 1) * n.args[0].derivative(k);
    }
    case Op::Sin: return cos(n.args[0]) * n.args[0].derivative(k);
    case Op::Cos: return -(sin(n.args[0]) * n.args[0].derivative(k));
  }
  return constant(0.0);
}

std::string Expr::str() const {
  const Node& n = *node_;
  std::ostringstream os;
  os.precision(17);
  switch (n.op) {
    case Op::Const: os << n.value; break;
    case Op::Var: os << 'x' << n.var + 1; break;
    case Op::Add: os << '(' << n.args[0].str() << " + " << n.args[1].str() << ')'; break;
    case Op::Sub: os << '(' << n.args[0].str() << " - " << n.args[1].str() << ')'; break;
    case Op::Mul: os << n.args[0].str() << '*' << n.args[1].str(); break;
    case Op::Neg: os << "-(" << n.args[0].str() << ')'; break;
    case Op::Pow: os << '(' << n.args[0].str() << ")^" << static_cast<int>(n.value); break;
    case Op::Sin: os << "sin(" << n.args[0].str() << ')'; break;
    case Op::Cos: os << "cos(" << n.args[0].str() << ')'; break;
  }
  return os.str();
}

// Recursive-descent parser:
//   sum    := term (('+'|'-') term)*
//   term   := unary ('*' unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' integer)?
//   atom   := number | 'pi' | x<k> | (sin|cos) '(' sum ')' | '(' sum ')'
class ExprParser {
 public:
  ExprParser(const std::string& text, int dim, int line, int col0)
      : s_(text), dim_(dim), line_(line), col0_(col0) {}

  Expr run() {
    Expr e = sum();
    skip();
    if (pos_ != s_.size()) error("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void error(const std::string& what) {
    fail(ErrorKind::ParseError, "line " + std::to_string(line_) + ", column " +
                                    std::to_string(col0_ + static_cast<int>(pos_)) + ": " + what);
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

  Expr sum() {
    Expr e = term();
    for (;;) {
      if (accept('+')) e = e + term();
      else if (accept('-')) e = e - term();
      else return e;
    }
  }
  Expr term() {
    Expr e = unary();
    while (accept('*')) e = e * unary();
    return e;
  }
  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }
  Expr power() {
    Expr base = atom();
    if (accept('^')) {
      skip();
      bool neg = accept('-');
      skip();
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) error("expected integer exponent");
      const int e = std::stoi(s_.substr(start, pos_ - start));
      return Expr::pow(base, neg ? -e : e);
    }
    return base;
  }
  Expr atom() {
    skip();
    if (pos_ >= s_.size()) error("unexpected end of expression");
    const char c = s_[pos_];
    if (accept('(')) {
      Expr e = sum();
      if (!accept(')')) error("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        error("bad number");
      }
      pos_ += used;
      return Expr::constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string word = s_.substr(start, pos_ - start);
      if (word == "pi") return Expr::constant(std::numbers::pi);
      if (word == "sin" || word == "cos") {
        if (!accept('(')) error("expected '(' after " + word);
        Expr arg = sum();
        if (!accept(')')) error("expected ')'");
        return word == "sin" ? Expr::sin(arg) : Expr::cos(arg);
      }
      if (word.size() > 1 && word[0] == 'x' &&
          word.find_first_not_of("0123456789", 1) == std::string::npos) {
        const int k = std::stoi(word.substr(1));
        if (k < 1 || k > dim_) {
          pos_ = start;
          error("coordinate " + word + " out of range 1.." + std::to_string(dim_));
        }
        return Expr::variable(k - 1);
      }
      pos_ = start;
      error("unknown identifier '" + word + "'");
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int dim_;
  int line_;
  int col0_;
};

Expr Expr::parse(const std::string& text, int dim, int line, int col0) {
  return ExprParser(text, dim, line, col0).run();
}

}  // namespace cclab
