#include "dglue/numerics.hpp"

#include <algorithm>

namespace dglue {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::LocusOutsideBlock: return "LocusOutsideBlock";
    case ErrorCode::NotADiffeomorphism: return "NotADiffeomorphism";
    case ErrorCode::HypothesisNotAsserted: return "HypothesisNotAsserted";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::NotInImage: return "NotInImage";
    case ErrorCode::NonSmoothField: return "NonSmoothField";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IncompatiblePair: return "IncompatiblePair";
    case ErrorCode::IncompatibleSections: return "IncompatibleSections";
    case ErrorCode::NotAFunctionOnGluedSpace: return "NotAFunctionOnGluedSpace";
    case ErrorCode::IncompatibleMetrics: return "IncompatibleMetrics";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::IncompatibleConnections: return "IncompatibleConnections";
    case ErrorCode::ModesDisagree: return "ModesDisagree";
    case ErrorCode::RankAmbiguous: return "RankAmbiguous";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
  }
  return "Error";
}

const char* mode_name(DiffMode mode) { return mode == DiffMode::ForwardDual ? "dual" : "fd"; }

DiffMode parse_mode(const std::string& name) {
  if (name == "dual" || name == "forward_dual") return DiffMode::ForwardDual;
  if (name == "fd" || name == "finite_difference") return DiffMode::FiniteDifference;
  throw Error(ErrorCode::ValidationError, "unknown differentiation mode '" + name + "'");
}

std::uint64_t Rng::next() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform(double lo, double hi) {
  double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

namespace detail {
int& fd_depth() {
  thread_local int depth = 0;
  return depth;
}
}  // namespace detail

std::vector<double> gradient(const Field& h, const std::vector<double>& x, const DiffConfig& cfg) {
  return gradient<double>(h, std::span<const double>(x), cfg);
}

Eigen::MatrixXd jacobian_matrix(const Field& f, const std::vector<double>& x, const DiffConfig& cfg) {
  auto j = jacobian<double>(f, std::span<const double>(x), cfg);
  return to_matrix(j, f.out_dim(), f.in_dim());
}

FdCrossCheck fd_cross_check(const Field& f, const std::vector<double>& x, double fd_step) {
  DiffConfig dual{DiffMode::ForwardDual, fd_step};
  DiffConfig fd{DiffMode::FiniteDifference, fd_step};
  DiffConfig fd2{DiffMode::FiniteDifference, 2.0 * fd_step};
  auto jd = jacobian<double>(f, std::span<const double>(x), dual);
  auto jf = jacobian<double>(f, std::span<const double>(x), fd);
  auto jf2 = jacobian<double>(f, std::span<const double>(x), fd2);
  auto fx = f(x);
  double scale = 1.0;
  for (double v : fx) scale = std::max(scale, std::abs(v));
  for (double v : jd) scale = std::max(scale, std::abs(v));

  FdCrossCheck r;
  double richardson = 0.0;
  for (size_t i = 0; i < jd.size(); ++i) {
    if (!std::isfinite(jd[i]) || !std::isfinite(jf[i])) {
      r.discrepancy = std::numeric_limits<double>::infinity();
      continue;
    }
    r.discrepancy = std::max(r.discrepancy, std::abs(jd[i] - jf[i]));
    richardson = std::max(richardson, std::abs(jf2[i] - jf[i]) / 3.0);
  }
  const double roundoff = 1e-15 * scale / fd_step;
  r.expected_fd_error = richardson + roundoff;
  r.threshold = std::max(10.0 * r.expected_fd_error, 1e-8 * scale);
  r.agree = r.discrepancy <= r.threshold;
  return r;
}

void require_modes_agree(const Field& f, const std::vector<double>& x, double fd_step) {
  auto r = fd_cross_check(f, x, fd_step);
  if (!r.agree) {
    std::string where;
    for (size_t i = 0; i < x.size(); ++i) where += (i ? "," : "") + std::to_string(x[i]);
    throw Error(ErrorCode::ModesDisagree, "dual and finite-difference derivatives differ by " +
                                              std::to_string(r.discrepancy) + " at (" + where + ")");
  }
}

Eigen::MatrixXd to_matrix(const std::vector<double>& rowmajor, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rowmajor[r * cols + c];
  }
  return m;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::MatrixXd rref_rows(const Eigen::MatrixXd& m, double tol) {
  Eigen::MatrixXd a = m;
  int rows = static_cast<int>(a.rows());
  int cols = static_cast<int>(a.cols());
  int lead = 0;
  for (int c = 0; c < cols && lead < rows; ++c) {
    Eigen::Index piv;
    double best = a.col(c).segment(lead, rows - lead).cwiseAbs().maxCoeff(&piv);
    if (best <= tol) {
      a.col(c).segment(lead, rows - lead).setZero();
      continue;
    }
    a.row(lead).swap(a.row(lead + piv));
    a.row(lead) /= a(lead, c);
    for (int r = 0; r < rows; ++r) {
      if (r != lead) a.row(r) -= a(r, c) * a.row(lead);
    }
    ++lead;
  }
  a = a.topRows(lead).eval();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(a.data()[i]) <= tol) a.data()[i] = 0.0;
  }
  return a;
}

Eigen::MatrixXd nullspace_rref(const Eigen::MatrixXd& relations, int cols, double sigma_cutoff) {
  if (relations.rows() == 0) return Eigen::MatrixXd::Identity(cols, cols);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(relations, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  double smax = s.size() ? s(0) : 0.0;
  int rank = 0;
  if (smax > 0.0) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      double rel = s(i) / smax;
      if (rel > sigma_cutoff * 100.0) {
        ++rank;
      } else if (rel >= sigma_cutoff / 100.0) {
        throw Error(ErrorCode::RankAmbiguous, "singular value ratio " + std::to_string(rel) +
                                                  " is too close to the rank cutoff");
      }
    }
  }
  Eigen::MatrixXd null = svd.matrixV().rightCols(cols - rank);
  if (null.cols() == 0) return Eigen::MatrixXd(cols, 0);
  Eigen::MatrixXd basis = rref_rows(null.transpose(), 1e-12);
  return basis.transpose();
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

std::vector<std::vector<double>> cell_grid(const std::vector<std::pair<double, double>>& box, int per_axis) {
  std::vector<std::vector<double>> pts{{}};
  for (const auto& [lo, hi] : box) {
    std::vector<std::vector<double>> next;
    for (const auto& p : pts) {
      for (int i = 0; i < per_axis; ++i) {
        auto q = p;
        q.push_back(lo + (hi - lo) * (i + 0.5) / per_axis);
        next.push_back(std::move(q));
      }
    }
    pts = std::move(next);
  }
  return pts;
}

}  // namespace dglue
