#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "dglue/dual.hpp"
#include "dglue/errors.hpp"
#include "dglue/expr.hpp"

namespace dglue {

// Smooth map R^in -> R^out, evaluable on double and on nested duals up to
// R3.  A field built from expressions supports every level; a field that
// differentiates another field internally loses one level per derivative.
class Field {
 public:
  static constexpr int kTopLevel = 3;

  Field() = default;

  int in_dim() const { return in_; }
  int out_dim() const { return out_; }
  int max_level() const { return level_; }
  bool empty() const { return level_ < 0; }

  template <typename T>
  std::vector<T> operator()(std::span<const T> x) const {
    if (static_cast<int>(x.size()) != in_) {
      throw Error(ErrorCode::DimensionMismatch, "field expects " + std::to_string(in_) + " coordinates");
    }
    if (level_of<T>::value > level_) {
      throw Error(ErrorCode::NonSmoothField, "field not differentiable to the requested order");
    }
    if constexpr (std::is_same_v<T, double>) return impl_->f0(x);
    else if constexpr (std::is_same_v<T, R1>) return impl_->f1(x);
    else if constexpr (std::is_same_v<T, R2>) return impl_->f2(x);
    else {
      static_assert(std::is_same_v<T, R3>, "unsupported scalar type");
      return impl_->f3(x);
    }
  }

  std::vector<double> operator()(const std::vector<double>& x) const {
    return (*this)(std::span<const double>(x));
  }

  template <typename T>
  T scalar(std::span<const T> x) const {
    return (*this)(x)[0];
  }

  static Field from_exprs(int in, std::vector<Expr> components);
  static Field from_expr(int in, const Expr& e) { return from_exprs(in, {e}); }
  static Field constant(int in, std::vector<double> values);

  const std::vector<Expr>* exprs() const { return impl_ && !impl_->exprs.empty() ? &impl_->exprs : nullptr; }

  // f is a generic callable (std::span<const T>) -> std::vector<T>.  It is
  // instantiated only for levels <= base_level - Depth, so its body may
  // evaluate other fields at Dual<T>.
  template <int Depth, typename F>
  static Field lift(int in, int out, int base_level, F f) {
    Field r;
    r.in_ = in;
    r.out_ = out;
    r.level_ = base_level - Depth;
    if (r.level_ < 0) throw Error(ErrorCode::NonSmoothField, "derived field exhausts the derivative budget");
    auto impl = std::make_shared<Impl>();
    if constexpr (Depth <= 3) impl->f0 = [f](std::span<const double> x) { return f(x); };
    if constexpr (Depth <= 2) {
      if (r.level_ >= 1) impl->f1 = [f](std::span<const R1> x) { return f(x); };
    }
    if constexpr (Depth <= 1) {
      if (r.level_ >= 2) impl->f2 = [f](std::span<const R2> x) { return f(x); };
    }
    if constexpr (Depth == 0) {
      if (r.level_ >= 3) impl->f3 = [f](std::span<const R3> x) { return f(x); };
    }
    r.impl_ = std::move(impl);
    return r;
  }

 private:
  int in_ = 0;
  int out_ = 0;
  int level_ = -1;
  // Shared so that copies, which nested fields capture freely, stay cheap.
  struct Impl {
    std::vector<Expr> exprs;
    std::function<std::vector<double>(std::span<const double>)> f0;
    std::function<std::vector<R1>(std::span<const R1>)> f1;
    std::function<std::vector<R2>(std::span<const R2>)> f2;
    std::function<std::vector<R3>(std::span<const R3>)> f3;
  };
  std::shared_ptr<Impl> impl_;
};

inline int min_level(std::initializer_list<const Field*> fields) {
  int m = Field::kTopLevel;
  for (const Field* f : fields) m = std::min(m, f->max_level());
  return m;
}

// g o f
Field compose(const Field& g, const Field& f);

// Entrywise a + b and c * a.
Field add(const Field& a, const Field& b);
Field scale(double c, const Field& a);
// Pointwise product of a scalar field with a vector field.
Field multiply(const Field& h, const Field& v);
// Pointwise matrix (n x n, row-major) times vector.
Field mat_vec(const Field& m, const Field& v);

}  // namespace dglue
