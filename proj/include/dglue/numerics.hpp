#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dglue/dual.hpp"
#include "dglue/errors.hpp"
#include "dglue/field.hpp"

namespace dglue {

enum class DiffMode { ForwardDual, FiniteDifference };

struct DiffConfig {
  DiffMode mode = DiffMode::ForwardDual;
  double fd_step = 1e-5;
};

struct Tolerances {
  double domain = 1e-3;        // openness probe offset
  double numeric = 1e-9;       // round trips, relation residuals
  double sigma_cutoff = 1e-8;  // rank decisions, relative to the largest singular value
  double pd_floor = 1e-10;     // positive definiteness, relative to the largest eigenvalue
  double symmetry = 1e-12;
  double pairing = 1e-10;
  double koszul = 1e-6;

  // Leibniz, symmetry and compatibility residual tolerance.
  double calculus(DiffMode mode) const { return mode == DiffMode::ForwardDual ? 1e-10 : 1e-6; }
};

struct SamplePlan {
  int per_axis = 16;
  int locus = 8;
  double probe_ratio = 0.5;
  int probe_steps = 6;
  std::uint64_t seed = 20240917;
  int random_sections = 8;
};

const char* mode_name(DiffMode mode);
DiffMode parse_mode(const std::string& name);

// Deterministic generator; the uniform mapping is fixed so sampled families do
// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
  std::uint64_t next();
  double uniform(double lo, double hi);

 private:
  std::uint64_t state_;
};

namespace detail {
int& fd_depth();
}

// J[o * in + i] = d f_o / d x_i at x.
template <typename T>
std::vector<T> jacobian(const Field& f, std::span<const T> x, const DiffConfig& cfg) {
  const int n = f.in_dim();
  const int m = f.out_dim();
  std::vector<T> jac(static_cast<size_t>(m) * n, T(0.0));
  if (cfg.mode == DiffMode::ForwardDual) {
    if (n > kMaxPartials) throw Error(ErrorCode::DimensionMismatch, "dual engine supports at most 4 variables");
    if constexpr (level_of<T>::value >= Field::kTopLevel) {
      throw Error(ErrorCode::NonSmoothField, "derivative nesting exceeds the dual engine depth");
    } else {
      std::vector<Dual<T>> xd(n);
      for (int i = 0; i < n; ++i) xd[i] = Dual<T>::variable(x[i], i);
      auto y = f(std::span<const Dual<T>>(xd));
      for (int o = 0; o < m; ++o) {
        for (int i = 0; i < n; ++i) jac[o * n + i] = y[o].d[i];
      }
    }
    return jac;
  }
  int& depth = detail::fd_depth();
  const double h = cfg.fd_step * std::pow(10.0, depth);
  ++depth;
  try {
    std::vector<T> xp(x.begin(), x.end());
    for (int i = 0; i < n; ++i) {
      T saved = xp[i];
      xp[i] = saved + h;
      auto fp = f(std::span<const T>(xp));
      xp[i] = saved - h;
      auto fm = f(std::span<const T>(xp));
      xp[i] = saved;
      for (int o = 0; o < m; ++o) jac[o * n + i] = (fp[o] - fm[o]) * (1.0 / (2.0 * h));
    }
  } catch (...) {
    --depth;
    throw;
  }
  --depth;
  return jac;
}

template <typename T>
std::vector<T> gradient(const Field& h, std::span<const T> x, const DiffConfig& cfg) {
  if (h.out_dim() != 1) throw Error(ErrorCode::DimensionMismatch, "gradient expects a scalar field");
  return jacobian(h, x, cfg);
}

std::vector<double> gradient(const Field& h, const std::vector<double>& x, const DiffConfig& cfg = {});
Eigen::MatrixXd jacobian_matrix(const Field& f, const std::vector<double>& x, const DiffConfig& cfg = {});

// The result of comparing dual and finite-difference derivatives at a point.
struct FdCrossCheck {
  double discrepancy = 0.0;
  double expected_fd_error = 0.0;
  double threshold = 0.0;
  bool agree = true;
};

FdCrossCheck fd_cross_check(const Field& f, const std::vector<double>& x, double fd_step = 1e-5);
// Throws ModesDisagree when the check fails.
void require_modes_agree(const Field& f, const std::vector<double>& x, double fd_step = 1e-5);

// Small dense solves on any scalar type, pivoting on value parts.
template <typename T>
std::vector<T> solve_dense(std::vector<T> a, std::vector<T> b, int n, int rhs = 1) {
  for (int c = 0; c < n; ++c) {
    int piv = c;
    double best = std::abs(value_of(a[c * n + c]));
    for (int r = c + 1; r < n; ++r) {
      double v = std::abs(value_of(a[r * n + c]));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == 0.0) throw Error(ErrorCode::SingularGram, "singular matrix in dense solve");
    if (piv != c) {
      for (int k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      for (int k = 0; k < rhs; ++k) std::swap(b[c * rhs + k], b[piv * rhs + k]);
    }
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      T factor = a[r * n + c] / a[c * n + c];
      if (value_of(factor) == 0.0 && level_of<T>::value == 0) continue;
      for (int k = c; k < n; ++k) a[r * n + k] = a[r * n + k] - factor * a[c * n + k];
      for (int k = 0; k < rhs; ++k) b[r * rhs + k] = b[r * rhs + k] - factor * b[c * rhs + k];
    }
  }
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < rhs; ++k) b[r * rhs + k] = b[r * rhs + k] / a[r * n + r];
  }
  return b;
}

template <typename T>
std::vector<T> inverse_dense(const std::vector<T>& a, int n) {
  std::vector<T> id(static_cast<size_t>(n) * n, T(0.0));
  for (int i = 0; i < n; ++i) id[i * n + i] = T(1.0);
  return solve_dense(a, id, n, n);
}

Eigen::MatrixXd to_matrix(const std::vector<double>& rowmajor, int rows, int cols);
Eigen::VectorXd to_vector(const std::vector<double>& v);
std::vector<double> to_std(const Eigen::VectorXd& v);

// Basis of the nullspace of `relations` (rows are linear constraints on
// R^cols), columns in reduced row echelon form.  Rank is decided by an SVD
// with the cutoff sigma_cutoff * sigma_max; singular values that fall in the
// band [cutoff / 100, cutoff * 100] raise RankAmbiguous.
Eigen::MatrixXd nullspace_rref(const Eigen::MatrixXd& relations, int cols, double sigma_cutoff);

// Reduced row echelon form of the row space of m, zero rows dropped.
Eigen::MatrixXd rref_rows(const Eigen::MatrixXd& m, double tol = 1e-12);

double max_abs(const Eigen::MatrixXd& m);

std::vector<std::vector<double>> cell_grid(const std::vector<std::pair<double, double>>& box, int per_axis);

}  // namespace dglue
