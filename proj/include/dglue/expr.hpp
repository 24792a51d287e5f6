#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dglue/dual.hpp"

namespace dglue {

// Immutable scalar expression over coordinates x0..x(n-1).
class Expr {
 public:
  enum class Op { Const, Var, Add, Mul, Neg, Div, Pow, Exp, Log, Sin, Cos, Sqrt, Cbrt, Abs, Sign };

  struct Node {
    Op op;
    double value = 0.0;
    int index = 0;
    std::vector<Expr> args;
  };

  Expr() : Expr(0.0) {}
  Expr(double c);

  static Expr var(int i);
  static Expr make(Op op, std::vector<Expr> args, int index = 0);

  Op op() const { return node_->op; }
  double constant() const { return node_->value; }
  int index() const { return node_->index; }
  const std::vector<Expr>& args() const { return node_->args; }

  bool is_constant() const { return node_->op == Op::Const; }
  bool is_zero() const { return is_constant() && node_->value == 0.0; }
  bool is_one() const { return is_constant() && node_->value == 1.0; }

  // One past the largest variable index referenced.
  int arity() const;

  template <typename T>
  T eval(std::span<const T> x) const;

  double operator()(const std::vector<double>& x) const {
    return eval<double>(std::span<const double>(x));
  }

  std::string str() const;

 private:
  std::shared_ptr<const Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

Expr pow(const Expr& a, int k);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr sqrt(const Expr& a);
Expr cbrt(const Expr& a);
Expr abs(const Expr& a);

// Sum of c * prod x_i^e_i.
struct Monomial {
  double coefficient;
  std::vector<int> exponents;
};
Expr polynomial(const std::vector<Monomial>& terms);

Expr derivative(const Expr& e, int var);
Expr substitute(const Expr& e, const std::vector<Expr>& replacement);

template <typename T>
T Expr::eval(std::span<const T> x) const {
  using std::abs;
  using std::cbrt;
  using std::cos;
  using std::exp;
  using std::log;
  using std::pow;
  using std::sin;
  using std::sqrt;
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const:
      return T(n.value);
    case Op::Var:
      if (n.index >= static_cast<int>(x.size())) throw std::out_of_range("expression variable out of range");
      return x[n.index];
    case Op::Add: {
      T acc = n.args[0].eval(x);
      for (size_t i = 1; i < n.args.size(); ++i) acc = acc + n.args[i].eval(x);
      return acc;
    }
    case Op::Mul: {
      T acc = n.args[0].eval(x);
      for (size_t i = 1; i < n.args.size(); ++i) acc = acc * n.args[i].eval(x);
      return acc;
    }
    case Op::Neg:
      return -n.args[0].eval(x);
    case Op::Div:
      return n.args[0].eval(x) / n.args[1].eval(x);
    case Op::Pow:
      return T(pow(n.args[0].eval(x), n.index));
    case Op::Exp:
      return exp(n.args[0].eval(x));
    case Op::Log:
      return log(n.args[0].eval(x));
    case Op::Sin:
      return sin(n.args[0].eval(x));
    case Op::Cos:
      return cos(n.args[0].eval(x));
    case Op::Sqrt:
      return sqrt(n.args[0].eval(x));
    case Op::Cbrt:
      return cbrt(n.args[0].eval(x));
    case Op::Abs:
      return abs(n.args[0].eval(x));
    case Op::Sign:
      return T(std::copysign(1.0, value_of(n.args[0].eval(x))));
  }
  throw std::logic_error("unknown expression op");
}

}  // namespace dglue
