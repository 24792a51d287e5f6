#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dglue/field.hpp"
#include "dglue/numerics.hpp"

namespace dglue {

using Point = std::vector<double>;
using Box = std::vector<std::pair<double, double>>;

// Open subset of R^n cut out by strict inequalities e(x) > 0.
class EuclideanBlock {
 public:
  EuclideanBlock() = default;
  EuclideanBlock(int dim, std::vector<Expr> domain = {}, Box sample_box = {}, std::vector<Point> seeds = {});

  int dim() const { return dim_; }
  const std::vector<Expr>& domain() const { return domain_; }
  const Box& sample_box() const { return box_; }
  const std::vector<Point>& seeds() const { return seeds_; }

  bool contains(std::span<const double> x) const;
  bool contains(const Point& x) const { return contains(std::span<const double>(x)); }
  std::vector<Point> grid(int per_axis) const;

  // Seeds lie in the domain and each seed survives axis offsets of size eps_dom.
  void validate(const Tolerances& tol) const;

 private:
  int dim_ = 0;
  std::vector<Expr> domain_;
  Box box_;
  std::vector<Point> seeds_;
};

enum class LocusKind { PointSet, OpenSubdomain, Submanifold };
const char* locus_kind_name(LocusKind kind);

class GluingLocus {
 public:
  static GluingLocus point_set(std::vector<Point> points);
  static GluingLocus open_subdomain(std::vector<Expr> predicate, std::vector<Point> seeds = {});
  static GluingLocus submanifold(Field param_map, Box param_box, std::vector<Point> param_seeds = {});

  LocusKind kind() const { return kind_; }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<Expr>& predicate() const { return predicate_; }
  const std::vector<Point>& seeds() const { return seeds_; }
  const Field& param_map() const { return phi_; }
  const Box& param_box() const { return param_box_; }
  int param_dim() const { return phi_.in_dim(); }

 private:
  LocusKind kind_ = LocusKind::PointSet;
  std::vector<Point> points_;
  std::vector<Expr> predicate_;
  std::vector<Point> seeds_;
  Field phi_;
  Box param_box_;
};

struct GluingMap {
  Field forward;
  Field inverse;
};

struct HypothesisFlags {
  bool pullback_equality = true;
  bool omega_equality = true;
};

enum class Region { Block1Only, Locus, Block2Only };
enum class BlockTag { First, Second };
const char* region_name(Region r);

// Locus points carry block-1 coordinates; `param` is the submanifold
// parameter of a locus point when the locus is a submanifold.
struct GluedPoint {
  Region region = Region::Block1Only;
  Point coords;
  Point param;
};

std::string format_point(const Point& p);
std::string format_point(const GluedPoint& p);

class GluedSpace {
 public:
  const EuclideanBlock& block1() const { return b1_; }
  const EuclideanBlock& block2() const { return b2_; }
  const GluingLocus& locus() const { return locus_; }
  const GluingMap& gluing() const { return map_; }
  const HypothesisFlags& hypotheses() const { return flags_; }
  const Tolerances& tolerances() const { return tol_; }
  int n1() const { return b1_.dim(); }
  int n2() const { return b2_.dim(); }

  // Membership of a block-1 point in the locus.  Fills the submanifold
  // parameter when requested.
  bool in_locus(std::span<const double> p, Point* param = nullptr) const;
  bool in_locus(const Point& p, Point* param = nullptr) const { return in_locus(std::span<const double>(p), param); }
  template <typename T>
  bool in_locus_at(std::span<const T> p) const {
    Point v(p.size());
    for (size_t i = 0; i < p.size(); ++i) v[i] = value_of(p[i]);
    return in_locus(v);
  }
  // Locus point y with f(y) = q, when q lies in f(locus).
  std::optional<Point> locus_preimage(const Point& q, Point* param = nullptr) const;

  GluedPoint classify(BlockTag block, const Point& coords) const;
  GluedPoint embed(BlockTag block, const Point& coords) const { return classify(block, coords); }
  Point unembed(const GluedPoint& p, BlockTag block) const;

  Point forward(const Point& y) const { return map_.forward(y); }
  Point inverse(const Point& q) const { return map_.inverse(q); }
  // Df at y, n2 x n1.
  Eigen::MatrixXd gluing_jacobian(const Point& y, const DiffConfig& cfg = {}) const;
  // Columns span the tangent directions of the locus at a locus point.
  Eigen::MatrixXd locus_tangent(const GluedPoint& p, const DiffConfig& cfg = {}) const;

  std::vector<GluedPoint> locus_samples(const SamplePlan& plan) const;

  struct Samples {
    std::vector<GluedPoint> block1_only;
    std::vector<GluedPoint> block2_only;
    std::vector<GluedPoint> locus;
    std::vector<GluedPoint> all() const;
  };
  Samples samples(const SamplePlan& plan) const;

  // Points approaching x along the coordinate axes, offsets delta0 * ratio^k.
  std::vector<std::vector<GluedPoint>> probes(const GluedPoint& x, const SamplePlan& plan, double delta0 = 0.25) const;

 private:
  friend std::shared_ptr<const GluedSpace> build_glued_space(EuclideanBlock, EuclideanBlock, GluingLocus, GluingMap,
                                                             std::optional<HypothesisFlags>, const SamplePlan&,
                                                             const Tolerances&);
  bool project_to_submanifold(const Point& p, Point& param) const;

  EuclideanBlock b1_, b2_;
  GluingLocus locus_;
  GluingMap map_;
  HypothesisFlags flags_;
  Tolerances tol_;
  std::vector<Point> param_starts_;
};

using SpacePtr = std::shared_ptr<const GluedSpace>;

// Validates blocks, locus and gluing map.  Missing hypothesis flags default
// to the structural check below.
SpacePtr build_glued_space(EuclideanBlock b1, EuclideanBlock b2, GluingLocus locus, GluingMap map,
                           std::optional<HypothesisFlags> flags = std::nullopt, const SamplePlan& plan = {},
                           const Tolerances& tol = {});

// Sufficient check for both pullback hypotheses on coordinate differentials:
// point sets hold trivially; open and submanifold loci need the restricted
// differentials of both inductions to have full rank at the locus samples.
bool structural_hypotheses_hold(const GluedSpace& space, const SamplePlan& plan);

// Parse "<region>:<c1>,<c2>,..." with region block1|b1|block2|b2|locus.
GluedPoint parse_point(const GluedSpace& space, const std::string& spec);

}  // namespace dglue
