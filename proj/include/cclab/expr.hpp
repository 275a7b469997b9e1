#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cclab/core.hpp"

namespace cclab {

/// Small arithmetic expression in the coordinates x1..xn: + - * ^int,
/// sin, cos, numbers, pi, parentheses. Supports exact differentiation.
class Expr {
 public:
  enum class Op { Const, Var, Add, Sub, Mul, Neg, Pow, Sin, Cos };

  Expr();  // the constant 0
  static Expr constant(double c);
  static Expr variable(int k);

  /// Parses `text`; error messages report `line` and the column offset `col0`.
  static Expr parse(const std::string& text, int dim, int line = 1, int col0 = 1);

  double eval(const Vec& x) const;
  Expr derivative(int k) const;
  bool is_zero() const;
  bool is_constant() const;
  std::string str() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Expr make(Op op, double value, int var, std::vector<Expr> args);
  static Expr pow(const Expr& base, int exponent);
  static Expr sin(const Expr& a);
  static Expr cos(const Expr& a);

  std::shared_ptr<const Node> node_;
  friend class ExprParser;
};

}  // namespace cclab
