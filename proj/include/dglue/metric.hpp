#pragma once

#include <Eigen/Dense>

#include "dglue/check.hpp"
#include "dglue/forms.hpp"

namespace dglue {

// Pseudo-metric on the cotangent bundle of a block: a symmetric positive
// definite Gram field, row-major n x n.
class BlockMetric {
 public:
  BlockMetric() = default;
  explicit BlockMetric(Field gram);

  int dim() const { return n_; }
  const Field& gram() const { return gram_; }
  Eigen::MatrixXd at(const Point& x) const;
  // Gram of the dual metric on vectors, i.e. the inverse Gram.
  Field dual_gram() const;

 private:
  int n_ = 0;
  Field gram_;
};

CheckResult check_block_metric(const BlockMetric& g, const std::vector<Point>& samples, const Tolerances& tol = {});
double eval_block_metric(const EuclideanBlock& block, const BlockMetric& g, const Point& x, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& v);

// Phi(v) = Gram v, and its inverse.
Eigen::VectorXd pairing_apply(const Eigen::MatrixXd& gram, const Eigen::VectorXd& v);
Eigen::VectorXd pairing_invert(const Eigen::MatrixXd& gram, const Eigen::VectorXd& phi, double pd_floor = 1e-10);
Eigen::MatrixXd dual_gram(const Eigen::MatrixXd& gram, double pd_floor = 1e-10);
// Smallest eigenvalue relative to the largest; negative when indefinite.
double definiteness_ratio(const Eigen::MatrixXd& gram);

// g1 and g2 agree on the locus, evaluated on matched pairs (Df^T b, b); on
// open loci these span every fibre.
CheckResult check_metrics_compatible(const GluedSpace& space, const BlockMetric& g1, const BlockMetric& g2,
                                     const SamplePlan& plan = {});

class GluedMetric {
 public:
  GluedMetric() = default;
  GluedMetric(SpacePtr space, BlockMetric g1, BlockMetric g2);

  const SpacePtr& space() const { return space_; }
  const BlockMetric& g1() const { return g1_; }
  const BlockMetric& g2() const { return g2_; }

  // Gram matrix against the fibre basis.  On the locus it is
  // (B1^T M1 B1 + B2^T M2 B2) / 2 with B_i the block rows of the basis.
  Eigen::MatrixXd gram(const FibreModel& fibre) const;
  double eval(const FibreElement& a, const FibreElement& b) const;

 private:
  SpacePtr space_;
  BlockMetric g1_, g2_;
};

GluedMetric glue_metrics(SpacePtr space, BlockMetric g1, BlockMetric g2, const SamplePlan& plan = {});

// Functional on a fibre, components against the fibre basis.
struct DualElement {
  FibrePtr fibre;
  Eigen::VectorXd phi;
};

DualElement pairing_apply(const GluedMetric& g, const FibreElement& v);
FibreElement pairing_invert(const GluedMetric& g, const DualElement& phi);

class DualMetric {
 public:
  explicit DualMetric(GluedMetric g) : g_(std::move(g)) {}
  Eigen::MatrixXd gram(const FibreModel& fibre) const;
  double eval(const DualElement& a, const DualElement& b) const;

 private:
  GluedMetric g_;
};

DualMetric dual_metric(const GluedMetric& g);

}  // namespace dglue
