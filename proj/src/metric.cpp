#include "dglue/metric.hpp"

#include <sstream>

namespace dglue {

namespace {

std::string format_vec(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v(i);
  os << ")";
  return os.str();
}

}  // namespace

BlockMetric::BlockMetric(Field gram) : gram_(std::move(gram)) {
  n_ = gram_.in_dim();
  if (gram_.out_dim() != n_ * n_) throw Error(ErrorCode::DimensionMismatch, "Gram field must be n x n");
}

Eigen::MatrixXd BlockMetric::at(const Point& x) const { return to_matrix(gram_(x), n_, n_); }

Field BlockMetric::dual_gram() const {
  const int n = n_;
  Field m = gram_;
  return Field::lift<0>(n, n * n, m.max_level(), [m, n]<typename T>(std::span<const T> x) {
    return inverse_dense(m(x), n);
  });
}

double definiteness_ratio(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (gram + gram.transpose()));
  const auto& ev = es.eigenvalues();
  double top = ev.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0.0;
  return ev(0) / top;
}

CheckResult check_block_metric(const BlockMetric& g, const std::vector<Point>& samples, const Tolerances& tol) {
  CheckResult r;
  for (const auto& x : samples) {
    Eigen::MatrixXd m = g.at(x);
    double asym = max_abs(m - m.transpose());
    r.record(asym, tol.symmetry * std::max(1.0, max_abs(m)), format_point(x), "Gram is not symmetric");
    double ratio = definiteness_ratio(m);
    if (!(ratio > tol.pd_floor)) {
      r.ok = false;
      if (r.witnesses.size() < CheckResult::kMaxWitnesses) {
        r.witnesses.push_back({format_point(x), "Gram is not positive definite", ratio});
      }
    }
  }
  return r;
}

double eval_block_metric(const EuclideanBlock& block, const BlockMetric& g, const Point& x, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& v) {
  if (!block.contains(x)) throw Error(ErrorCode::OutsideDomain, format_point(x) + " is outside the block");
  return u.dot(g.at(x) * v);
}

Eigen::VectorXd pairing_apply(const Eigen::MatrixXd& gram, const Eigen::VectorXd& v) { return gram * v; }

Eigen::VectorXd pairing_invert(const Eigen::MatrixXd& gram, const Eigen::VectorXd& phi, double pd_floor) {
  if (gram.rows() == 0) return Eigen::VectorXd(0);
  if (!(definiteness_ratio(gram) > pd_floor)) {
    throw Error(ErrorCode::SingularGram, "Gram matrix is singular or indefinite");
  }
  return gram.ldlt().solve(phi);
}

Eigen::MatrixXd dual_gram(const Eigen::MatrixXd& gram, double pd_floor) {
  if (gram.rows() == 0) return gram;
  if (!(definiteness_ratio(gram) > pd_floor)) {
    throw Error(ErrorCode::SingularGram, "Gram matrix is singular or indefinite");
  }
  return gram.ldlt().solve(Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));
}

CheckResult check_metrics_compatible(const GluedSpace& space, const BlockMetric& g1, const BlockMetric& g2,
                                     const SamplePlan& plan) {
  if (g1.dim() != space.n1() || g2.dim() != space.n2()) {
    throw Error(ErrorCode::DimensionMismatch, "metric dimensions do not match the blocks");
  }
  CheckResult res;
  const double tol = space.tolerances().numeric;
  for (const auto& gp : space.locus_samples(plan)) {
    auto fib = compute_fibre(space, gp);
    // Columns: fibre elements to compare on.
    Eigen::MatrixXd pairs = fib->basis;
    if (fib->matched.cols() && fib->matched.cols() < fib->dim()) pairs = fib->basis * fib->matched;
    Eigen::MatrixXd a = pairs.topRows(space.n1());
    Eigen::MatrixXd b = pairs.bottomRows(space.n2());
    Eigen::MatrixXd m1 = a.transpose() * g1.at(gp.coords) * a;
    Eigen::MatrixXd m2 = b.transpose() * g2.at(fib->image) * b;
    for (Eigen::Index i = 0; i < pairs.cols(); ++i) {
      for (Eigen::Index j = i; j < pairs.cols(); ++j) {
        double d = std::abs(m1(i, j) - m2(i, j));
        std::ostringstream detail;
        detail << "pair " << format_vec(a.col(i)) << "|" << format_vec(b.col(i)) << " with " << format_vec(a.col(j))
               << "|" << format_vec(b.col(j)) << ": block 1 gives " << m1(i, j) << ", block 2 gives " << m2(i, j);
        res.record(d, tol * std::max({1.0, std::abs(m1(i, j)), std::abs(m2(i, j))}), format_point(gp), detail.str());
      }
    }
  }
  return res;
}

GluedMetric::GluedMetric(SpacePtr space, BlockMetric g1, BlockMetric g2)
    : space_(std::move(space)), g1_(std::move(g1)), g2_(std::move(g2)) {
  if (g1_.dim() != space_->n1() || g2_.dim() != space_->n2()) {
    throw Error(ErrorCode::DimensionMismatch, "metric dimensions do not match the blocks");
  }
}

Eigen::MatrixXd GluedMetric::gram(const FibreModel& fibre) const {
  switch (fibre.kind) {
    case FibreKind::Block1Fibre:
      return g1_.at(fibre.point.coords);
    case FibreKind::Block2Fibre:
      return g2_.at(fibre.point.coords);
    case FibreKind::CompatiblePairs:
      break;
  }
  Eigen::MatrixXd b1 = fibre.rho1();
  Eigen::MatrixXd b2 = fibre.rho2();
  Eigen::MatrixXd g = 0.5 * (b1.transpose() * g1_.at(fibre.point.coords) * b1) +
                      0.5 * (b2.transpose() * g2_.at(fibre.image) * b2);
  return g;
}

double GluedMetric::eval(const FibreElement& a, const FibreElement& b) const {
  if (a.fibre != b.fibre && a.fibre->point.coords != b.fibre->point.coords) {
    throw Error(ErrorCode::DimensionMismatch, "fibre elements over different points");
  }
  return a.c.dot(gram(*a.fibre) * b.c);
}

GluedMetric glue_metrics(SpacePtr space, BlockMetric g1, BlockMetric g2, const SamplePlan& plan) {
  auto s = space->samples(plan);
  std::vector<Point> pts1, pts2;
  for (const auto& p : s.block1_only) pts1.push_back(p.coords);
  for (const auto& p : s.block2_only) pts2.push_back(p.coords);
  for (const auto& p : s.locus) {
    pts1.push_back(p.coords);
    pts2.push_back(space->forward(p.coords));
  }
  for (const auto* r : {&pts1, &pts2}) {
    auto c = check_block_metric(r == &pts1 ? g1 : g2, *r, space->tolerances());
    if (!c.ok) {
      throw Error(ErrorCode::ValidationError, "block metric invalid at " + c.witnesses.front().location + ": " +
                                                  c.witnesses.front().detail);
    }
  }
  auto c = check_metrics_compatible(*space, g1, g2, plan);
  if (!c.ok) {
    const auto& w = c.witnesses.front();
    throw Error(ErrorCode::IncompatibleMetrics, "at " + w.location + ", " + w.detail);
  }
  return GluedMetric(std::move(space), std::move(g1), std::move(g2));
}

DualElement pairing_apply(const GluedMetric& g, const FibreElement& v) {
  return DualElement{v.fibre, g.gram(*v.fibre) * v.c};
}

FibreElement pairing_invert(const GluedMetric& g, const DualElement& phi) {
  return FibreElement{phi.fibre, pairing_invert(g.gram(*phi.fibre), phi.phi, g.space()->tolerances().pd_floor)};
}

Eigen::MatrixXd DualMetric::gram(const FibreModel& fibre) const {
  return dual_gram(g_.gram(fibre), g_.space()->tolerances().pd_floor);
}

double DualMetric::eval(const DualElement& a, const DualElement& b) const { return a.phi.dot(gram(*a.fibre) * b.phi); }

DualMetric dual_metric(const GluedMetric& g) { return DualMetric(g); }

}  // namespace dglue
