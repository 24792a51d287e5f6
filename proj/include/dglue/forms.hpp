#pragma once

#include <memory>
#include <utility>

#include <Eigen/Dense>

#include "dglue/check.hpp"
#include "dglue/field.hpp"
#include "dglue/numerics.hpp"
#include "dglue/space.hpp"

namespace dglue {

// Covector fields on a block are plain Fields with out_dim == block dim.
Field differential_block(const Field& h, const DiffConfig& cfg = {});
// map*: x -> Dmap(x)^T form(map(x)).
Field pullback(const Field& form, const Field& map, const DiffConfig& cfg = {});

// A smooth map from a parameter domain into a block.
struct Plot {
  BlockTag block = BlockTag::First;
  Field map;
  Point basepoint;
};

// Plot-wise value of a form: the pulled-back covector at parameter t.
Point evaluate_on_plot(const Field& form, const Plot& plot, const Point& t, const DiffConfig& cfg = {});
// Difference quotients at t converge as the step shrinks.
bool plot_is_smooth(const Plot& plot, const Point& t, int steps = 6);
// A form vanishes at x when every plot centred at x pulls it back to zero
// there.  Coordinate lines and a few random linear plots are tried.
bool form_vanishes_at(const Field& form, const Point& x, double tol, std::uint64_t seed = 1);

// i* form1 == (f o j)* form2 on the locus samples.
CheckResult check_forms_compatible(const GluedSpace& space, const Field& form1, const Field& form2,
                                   const SamplePlan& plan = {}, const DiffConfig& cfg = {});

enum class FibreKind { Block1Fibre, Block2Fibre, CompatiblePairs };

struct FibreModel {
  GluedPoint point;
  FibreKind kind = FibreKind::Block1Fibre;
  int n1 = 0;
  int n2 = 0;
  // Columns are basis elements; rows are block-1 then block-2 components
  // (only the relevant block away from the locus).
  Eigen::MatrixXd basis;
  Eigen::MatrixXd relations;
  // Locus data: Df at the point, f(point), and fibre coordinates of the
  // matched pairs (Df^T b, b), one column per coordinate covector b.
  Eigen::MatrixXd jacobian;
  Point image;
  Eigen::MatrixXd matched;

  int dim() const { return static_cast<int>(basis.cols()); }
  bool on_locus() const { return kind == FibreKind::CompatiblePairs; }
  Eigen::MatrixXd rho1() const;
  Eigen::MatrixXd rho2() const;
  Point block1_coords() const;
  Point block2_coords() const;
};

using FibrePtr = std::shared_ptr<const FibreModel>;

FibrePtr compute_fibre(const GluedSpace& space, const GluedPoint& point, const DiffConfig& cfg = {});

struct FibreElement {
  FibrePtr fibre;
  Eigen::VectorXd c;
};

Eigen::VectorXd rho1(const FibreElement& e);
Eigen::VectorXd rho2(const FibreElement& e);
// Unique fibre element with the given block components; throws
// IncompatiblePair when the pair is not in the fibre.  Off the locus only the
// relevant block component is used.
FibreElement rho_pair_inverse(const FibrePtr& fibre, const Eigen::VectorXd& a, const Eigen::VectorXd& b);
FibreElement fibre_element(const FibrePtr& fibre, const Eigen::VectorXd& block1, const Eigen::VectorXd& block2);

// A section of the glued cotangent bundle, stored through its two block
// restrictions.
class LambdaSection {
 public:
  LambdaSection() = default;
  static LambdaSection assemble(SpacePtr space, Field s1, Field s2, const SamplePlan& plan = {});
  static LambdaSection unchecked(SpacePtr space, Field s1, Field s2);

  const SpacePtr& space() const { return space_; }
  const Field& s1() const { return s1_; }
  const Field& s2() const { return s2_; }
  std::pair<Field, Field> split() const { return {s1_, s2_}; }

  Eigen::VectorXd block1_value(const FibreModel& fibre) const;
  Eigen::VectorXd block2_value(const FibreModel& fibre) const;
  FibreElement eval(const FibrePtr& fibre) const;
  FibreElement eval(const GluedPoint& point, const DiffConfig& cfg = {}) const;

 private:
  SpacePtr space_;
  Field s1_, s2_;
};

LambdaSection operator+(const LambdaSection& a, const LambdaSection& b);

// A function on the glued space through its block restrictions.
class GluedFunction {
 public:
  GluedFunction() = default;
  // h1 = h2 o f on the locus, checked at the locus samples.
  static GluedFunction from_splits(SpacePtr space, Field h1, Field h2, const SamplePlan& plan = {});
  // Pointwise-glued quantity: e1 on block 1, e2 on block 2 and the average
  // (e1 + e2 o f) / 2 on the locus, extended off the locus by the gluing
  // formula.
  static GluedFunction averaged(SpacePtr space, Field e1, Field e2);
  static GluedFunction unchecked(SpacePtr space, Field h1, Field h2);

  const SpacePtr& space() const { return space_; }
  const Field& h1() const { return h1_; }
  const Field& h2() const { return h2_; }
  // Averaged functions only: (e1 + e2 o f) / 2 and (e2 + e1 o f^-1) / 2.
  const Field& ext1() const { return ext1_; }
  const Field& ext2() const { return ext2_; }
  double value(const GluedPoint& p) const;

 private:
  SpacePtr space_;
  Field h1_, h2_, ext1_, ext2_;
};

LambdaSection differential_glued(const GluedFunction& h, const DiffConfig& cfg = {});
LambdaSection multiply(const GluedFunction& h, const LambdaSection& s);

// Relation residual of a block pair at a locus fibre.
double pair_residual(const FibreModel& fibre, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace dglue
