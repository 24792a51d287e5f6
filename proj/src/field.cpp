#include "dglue/field.hpp"

namespace dglue {

Field Field::from_exprs(int in, std::vector<Expr> components) {
  for (const auto& e : components) {
    if (e.arity() > in) {
      throw Error(ErrorCode::DimensionMismatch,
                  "expression " + e.str() + " uses more than " + std::to_string(in) + " coordinates");
    }
  }
  auto eval = [components]<typename T>(std::span<const T> x) {
    std::vector<T> out;
    out.reserve(components.size());
    for (const auto& e : components) out.push_back(e.eval(x));
    return out;
  };
  Field f = lift<0>(in, static_cast<int>(components.size()), kTopLevel, eval);
  f.impl_->exprs = std::move(components);
  return f;
}

Field Field::constant(int in, std::vector<double> values) {
  std::vector<Expr> comps;
  for (double v : values) comps.emplace_back(v);
  return from_exprs(in, std::move(comps));
}

Field compose(const Field& g, const Field& f) {
  if (g.in_dim() != f.out_dim()) throw Error(ErrorCode::DimensionMismatch, "composition dimension mismatch");
  if (g.exprs() && f.exprs()) {
    std::vector<Expr> comps;
    for (const auto& e : *g.exprs()) comps.push_back(substitute(e, *f.exprs()));
    return Field::from_exprs(f.in_dim(), std::move(comps));
  }
  auto eval = [g, f]<typename T>(std::span<const T> x) {
    auto y = f(x);
    return g(std::span<const T>(y));
  };
  return Field::lift<0>(f.in_dim(), g.out_dim(), min_level({&g, &f}), eval);
}

Field add(const Field& a, const Field& b) {
  if (a.in_dim() != b.in_dim() || a.out_dim() != b.out_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "sum of fields with different shapes");
  }
  if (a.exprs() && b.exprs()) {
    std::vector<Expr> comps;
    for (int i = 0; i < a.out_dim(); ++i) comps.push_back((*a.exprs())[i] + (*b.exprs())[i]);
    return Field::from_exprs(a.in_dim(), std::move(comps));
  }
  auto eval = [a, b]<typename T>(std::span<const T> x) {
    auto u = a(x);
    auto v = b(x);
    for (size_t i = 0; i < u.size(); ++i) u[i] = u[i] + v[i];
    return u;
  };
  return Field::lift<0>(a.in_dim(), a.out_dim(), min_level({&a, &b}), eval);
}

Field scale(double c, const Field& a) {
  if (a.exprs()) {
    std::vector<Expr> comps;
    for (const auto& e : *a.exprs()) comps.push_back(Expr(c) * e);
    return Field::from_exprs(a.in_dim(), std::move(comps));
  }
  auto eval = [c, a]<typename T>(std::span<const T> x) {
    auto u = a(x);
    for (auto& v : u) v = v * c;
    return u;
  };
  return Field::lift<0>(a.in_dim(), a.out_dim(), a.max_level(), eval);
}

Field multiply(const Field& h, const Field& v) {
  if (h.out_dim() != 1 || h.in_dim() != v.in_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "scalar times field shape mismatch");
  }
  if (h.exprs() && v.exprs()) {
    std::vector<Expr> comps;
    for (const auto& e : *v.exprs()) comps.push_back((*h.exprs())[0] * e);
    return Field::from_exprs(v.in_dim(), std::move(comps));
  }
  auto eval = [h, v]<typename T>(std::span<const T> x) {
    T s = h(x)[0];
    auto u = v(x);
    for (auto& c : u) c = s * c;
    return u;
  };
  return Field::lift<0>(v.in_dim(), v.out_dim(), min_level({&h, &v}), eval);
}

Field mat_vec(const Field& m, const Field& v) {
  const int n = v.out_dim();
  if (m.out_dim() != n * n || m.in_dim() != v.in_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "matrix field times vector field shape mismatch");
  }
  auto eval = [m, v, n]<typename T>(std::span<const T> x) {
    auto a = m(x);
    auto u = v(x);
    std::vector<T> out(n, T(0.0));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out[i] = out[i] + a[i * n + j] * u[j];
    }
    return out;
  };
  return Field::lift<0>(v.in_dim(), n, min_level({&m, &v}), eval);
}

}  // namespace dglue
