#pragma once

#include <array>
#include <cmath>
#include <type_traits>

namespace dglue {

inline constexpr int kMaxPartials = 4;

// Forward-mode dual number with a fixed number of partial slots.  Nesting
// Dual<Dual<double>> gives second derivatives.
template <typename T>
struct Dual {
  using value_type = T;

  T v{};
  std::array<T, kMaxPartials> d{};

  Dual() = default;
  Dual(double c) : v(c) {}
  template <typename U = T, typename = std::enable_if_t<!std::is_same_v<U, double>>>
  Dual(const T& value) : v(value) {}
  Dual(const T& value, const std::array<T, kMaxPartials>& partials) : v(value), d(partials) {}

  static Dual variable(const T& value, int slot) {
    Dual r(value, {});
    r.d[slot] = T(1.0);
    return r;
  }
};

template <typename T>
struct is_dual : std::false_type {};
template <typename T>
struct is_dual<Dual<T>> : std::true_type {};

template <typename T>
struct level_of : std::integral_constant<int, 0> {};
template <typename T>
struct level_of<Dual<T>> : std::integral_constant<int, 1 + level_of<T>::value> {};

inline double value_of(double x) { return x; }
template <typename T>
double value_of(const Dual<T>& x) {
  return value_of(x.v);
}

using R1 = Dual<double>;
using R2 = Dual<R1>;
using R3 = Dual<R2>;

template <typename T>
Dual<T> operator-(const Dual<T>& a) {
  Dual<T> r;
  r.v = -a.v;
  for (int i = 0; i < kMaxPartials; ++i) r.d[i] = -a.d[i];
  return r;
}

template <typename T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r;
  r.v = a.v + b.v;
  for (int i = 0; i < kMaxPartials; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}

template <typename T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r;
  r.v = a.v - b.v;
  for (int i = 0; i < kMaxPartials; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}

template <typename T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r;
  r.v = a.v * b.v;
  for (int i = 0; i < kMaxPartials; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}

template <typename T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r;
  r.v = a.v / b.v;
  T inv2 = T(1.0) / (b.v * b.v);
  for (int i = 0; i < kMaxPartials; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv2;
  return r;
}

template <typename T>
Dual<T> operator+(const Dual<T>& a, double b) {
  Dual<T> r = a;
  r.v = a.v + b;
  return r;
}
template <typename T>
Dual<T> operator+(double a, const Dual<T>& b) {
  return b + a;
}
template <typename T>
Dual<T> operator-(const Dual<T>& a, double b) {
  Dual<T> r = a;
  r.v = a.v - b;
  return r;
}
template <typename T>
Dual<T> operator-(double a, const Dual<T>& b) {
  return -b + a;
}
template <typename T>
Dual<T> operator*(const Dual<T>& a, double b) {
  Dual<T> r;
  r.v = a.v * b;
  for (int i = 0; i < kMaxPartials; ++i) r.d[i] = a.d[i] * b;
  return r;
}
template <typename T>
Dual<T> operator*(double a, const Dual<T>& b) {
  return b * a;
}
template <typename T>
Dual<T> operator/(const Dual<T>& a, double b) {
  return a * (1.0 / b);
}
template <typename T>
Dual<T> operator/(double a, const Dual<T>& b) {
  return Dual<T>(a) / b;
}

template <typename T>
Dual<T>& operator+=(Dual<T>& a, const Dual<T>& b) {
  a = a + b;
  return a;
}
template <typename T>
Dual<T>& operator-=(Dual<T>& a, const Dual<T>& b) {
  a = a - b;
  return a;
}
template <typename T>
Dual<T>& operator*=(Dual<T>& a, const Dual<T>& b) {
  a = a * b;
  return a;
}
template <typename T>
Dual<T>& operator+=(Dual<T>& a, double b) {
  a = a + b;
  return a;
}
template <typename T>
Dual<T>& operator*=(Dual<T>& a, double b) {
  a = a * b;
  return a;
}

namespace detail {
template <typename T, typename F>
Dual<T> chain(const Dual<T>& a, const T& value, const F& derivative) {
  Dual<T> r;
  r.v = value;
  T dv = derivative;
  for (int i = 0; i < kMaxPartials; ++i) r.d[i] = dv * a.d[i];
  return r;
}
}  // namespace detail

template <typename T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  T e = exp(a.v);
  return detail::chain(a, e, e);
}

template <typename T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return detail::chain(a, T(log(a.v)), T(1.0) / a.v);
}

template <typename T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  T s = sqrt(a.v);
  return detail::chain(a, s, T(0.5) / s);
}

template <typename T>
Dual<T> cbrt(const Dual<T>& a) {
  using std::cbrt;
  T c = cbrt(a.v);
  return detail::chain(a, c, T(1.0) / (T(3.0) * c * c));
}

template <typename T>
Dual<T> sin(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return detail::chain(a, T(sin(a.v)), T(cos(a.v)));
}

template <typename T>
Dual<T> cos(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return detail::chain(a, T(cos(a.v)), T(-sin(a.v)));
}

// d|x| at 0 is taken as +1.
template <typename T>
Dual<T> abs(const Dual<T>& a) {
  double s = std::copysign(1.0, value_of(a.v));
  return a * s;
}

template <typename T>
Dual<T> pow(const Dual<T>& a, int k) {
  using std::pow;
  if (k == 0) return Dual<T>(1.0);
  return detail::chain(a, T(pow(a.v, k)), T(double(k) * pow(a.v, k - 1)));
}

}  // namespace dglue
