#include "dglue/expr.hpp"

#include <algorithm>
#include <sstream>

namespace dglue {

Expr::Expr(double c) : node_(std::make_shared<const Node>(Node{Op::Const, c, 0, {}})) {}

Expr Expr::var(int i) {
  if (i < 0) throw std::invalid_argument("negative variable index");
  Expr e;
  e.node_ = std::make_shared<const Node>(Node{Op::Var, 0.0, i, {}});
  return e;
}

Expr Expr::make(Op op, std::vector<Expr> args, int index) {
  Expr e;
  e.node_ = std::make_shared<const Node>(Node{op, 0.0, index, std::move(args)});
  return e;
}

int Expr::arity() const {
  if (op() == Op::Var) return index() + 1;
  int n = 0;
  for (const auto& a : args()) n = std::max(n, a.arity());
  return n;
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.constant() + b.constant());
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  std::vector<Expr> args;
  if (a.op() == Expr::Op::Add) args = a.args(); else args.push_back(a);
  if (b.op() == Expr::Op::Add) {
    args.insert(args.end(), b.args().begin(), b.args().end());
  } else {
    args.push_back(b);
  }
  return Expr::make(Expr::Op::Add, std::move(args));
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr(-a.constant());
  if (a.op() == Expr::Op::Neg) return a.args()[0];
  return Expr::make(Expr::Op::Neg, {a});
}

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.constant() * b.constant());
  if (a.is_zero() || b.is_zero()) return Expr(0.0);
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  std::vector<Expr> args;
  if (a.op() == Expr::Op::Mul) args = a.args(); else args.push_back(a);
  if (b.op() == Expr::Op::Mul) {
    args.insert(args.end(), b.args().begin(), b.args().end());
  } else {
    args.push_back(b);
  }
  return Expr::make(Expr::Op::Mul, std::move(args));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_zero()) throw std::domain_error("division by the zero expression");
  if (a.is_zero()) return Expr(0.0);
  if (b.is_one()) return a;
  if (a.is_constant() && b.is_constant()) return Expr(a.constant() / b.constant());
  return Expr::make(Expr::Op::Div, {a, b});
}

Expr pow(const Expr& a, int k) {
  if (k == 0) return Expr(1.0);
  if (k == 1) return a;
  if (a.is_constant()) return Expr(std::pow(a.constant(), k));
  return Expr::make(Expr::Op::Pow, {a}, k);
}

namespace {
Expr unary(Expr::Op op, const Expr& a) {
  if (a.is_constant()) {
    std::vector<double> none;
    return Expr(Expr::make(op, {a}).eval<double>(std::span<const double>(none)));
  }
  return Expr::make(op, {a});
}
}  // namespace

Expr exp(const Expr& a) { return unary(Expr::Op::Exp, a); }
Expr log(const Expr& a) { return unary(Expr::Op::Log, a); }
Expr sin(const Expr& a) { return unary(Expr::Op::Sin, a); }
Expr cos(const Expr& a) { return unary(Expr::Op::Cos, a); }
Expr sqrt(const Expr& a) { return unary(Expr::Op::Sqrt, a); }
Expr cbrt(const Expr& a) { return unary(Expr::Op::Cbrt, a); }
Expr abs(const Expr& a) { return unary(Expr::Op::Abs, a); }

Expr polynomial(const std::vector<Monomial>& terms) {
  Expr sum(0.0);
  for (const auto& t : terms) {
    Expr m(t.coefficient);
    for (size_t i = 0; i < t.exponents.size(); ++i) {
      if (t.exponents[i] < 0) throw std::invalid_argument("negative monomial exponent");
      m = m * pow(Expr::var(static_cast<int>(i)), t.exponents[i]);
    }
    sum = sum + m;
  }
  return sum;
}

Expr derivative(const Expr& e, int var) {
  using Op = Expr::Op;
  const auto& a = e.args();
  switch (e.op()) {
    case Op::Const:
      return Expr(0.0);
    case Op::Var:
      return Expr(e.index() == var ? 1.0 : 0.0);
    case Op::Add: {
      Expr s(0.0);
      for (const auto& x : a) s = s + derivative(x, var);
      return s;
    }
    case Op::Mul: {
      Expr s(0.0);
      for (size_t i = 0; i < a.size(); ++i) {
        Expr term = derivative(a[i], var);
        if (term.is_zero()) continue;
        for (size_t j = 0; j < a.size(); ++j) {
          if (j != i) term = term * a[j];
        }
        s = s + term;
      }
      return s;
    }
    case Op::Neg:
      return -derivative(a[0], var);
    case Op::Div: {
      Expr du = derivative(a[0], var);
      Expr dv = derivative(a[1], var);
      return du / a[1] - a[0] * dv / pow(a[1], 2);
    }
    case Op::Pow:
      return Expr(double(e.index())) * pow(a[0], e.index() - 1) * derivative(a[0], var);
    case Op::Exp:
      return e * derivative(a[0], var);
    case Op::Log:
      return derivative(a[0], var) / a[0];
    case Op::Sin:
      return cos(a[0]) * derivative(a[0], var);
    case Op::Cos:
      return -(sin(a[0]) * derivative(a[0], var));
    case Op::Sqrt:
      return derivative(a[0], var) / (Expr(2.0) * e);
    case Op::Cbrt:
      return derivative(a[0], var) / (Expr(3.0) * pow(e, 2));
    case Op::Abs:
      return Expr::make(Op::Sign, {a[0]}) * derivative(a[0], var);
    case Op::Sign:
      return Expr(0.0);
  }
  throw std::logic_error("unknown expression op");
}

Expr substitute(const Expr& e, const std::vector<Expr>& replacement) {
  using Op = Expr::Op;
  switch (e.op()) {
    case Op::Const:
      return e;
    case Op::Var:
      if (e.index() >= static_cast<int>(replacement.size())) {
        throw std::out_of_range("substitution misses a variable");
      }
      return replacement[e.index()];
    case Op::Add: {
      Expr s(0.0);
      for (const auto& x : e.args()) s = s + substitute(x, replacement);
      return s;
    }
    case Op::Mul: {
      Expr s(1.0);
      for (const auto& x : e.args()) s = s * substitute(x, replacement);
      return s;
    }
    case Op::Neg:
      return -substitute(e.args()[0], replacement);
    case Op::Div:
      return substitute(e.args()[0], replacement) / substitute(e.args()[1], replacement);
    case Op::Pow:
      return pow(substitute(e.args()[0], replacement), e.index());
    default: {
      std::vector<Expr> args;
      for (const auto& x : e.args()) args.push_back(substitute(x, replacement));
      if (args[0].is_constant()) return unary(e.op(), args[0]);
      return Expr::make(e.op(), std::move(args), e.index());
    }
  }
}

std::string Expr::str() const {
  std::ostringstream os;
  const auto& a = args();
  auto join = [&](const char* sep) {
    os << "(";
    for (size_t i = 0; i < a.size(); ++i) {
      if (i) os << sep;
      os << a[i].str();
    }
    os << ")";
  };
  switch (op()) {
    case Op::Const: os << constant(); break;
    case Op::Var: os << "x" << index(); break;
    case Op::Add: join(" + "); break;
    case Op::Mul: join("*"); break;
    case Op::Neg: os << "-" << a[0].str(); break;
    case Op::Div: os << "(" << a[0].str() << ")/(" << a[1].str() << ")"; break;
    case Op::Pow: os << a[0].str() << "^" << index(); break;
    case Op::Exp: os << "exp" << "(" << a[0].str() << ")"; break;
    case Op::Log: os << "log(" << a[0].str() << ")"; break;
    case Op::Sin: os << "sin(" << a[0].str() << ")"; break;
    case Op::Cos: os << "cos(" << a[0].str() << ")"; break;
    case Op::Sqrt: os << "sqrt(" << a[0].str() << ")"; break;
    case Op::Cbrt: os << "cbrt(" << a[0].str() << ")"; break;
    case Op::Abs: os << "|" << a[0].str() << "|"; break;
    case Op::Sign: os << "sign(" << a[0].str() << ")"; break;
  }
  return os.str();
}

}  // namespace dglue
