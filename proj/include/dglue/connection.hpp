#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dglue/check.hpp"
#include "dglue/families.hpp"
#include "dglue/metric.hpp"

namespace dglue {

// Connection on the cotangent bundle of a block, given by Christoffel symbols
// Gamma^k_ij stored at k*n*n + i*n + j.  (nabla s)_ij = d_i s_j - Gamma^k_ij s_k,
// the first index being the direction slot.
class BlockConnection {
 public:
  BlockConnection() = default;
  explicit BlockConnection(Field christoffel);
  static BlockConnection flat(int n);
  static BlockConnection from_exprs(int n, std::vector<Expr> symbols);

  int dim() const { return n_; }
  const Field& christoffel() const { return gamma_; }
  double symbol(const Point& x, int k, int i, int j) const;

  // nabla s as an n*n row-major field.
  Field apply(const Field& s, const DiffConfig& cfg = {}) const;
  Eigen::MatrixXd apply_at(const Field& s, const Point& x, const DiffConfig& cfg = {}) const;
  // Adds constant offsets to every symbol.
  BlockConnection perturbed(const std::vector<double>& delta) const;

 private:
  int n_ = 0;
  Field gamma_;
};

// Block calculus.  Vector fields are Fields with out_dim == dim; forms act as
// vector fields through the metric, t = M r.
Field vector_field(const BlockMetric& g, const Field& r);
double action_block(const Field& t, const Field& h, const Point& x, const DiffConfig& cfg = {});
Field action_field(const Field& t, const Field& h, const DiffConfig& cfg = {});
// [t1, t2] through its action on the coordinate functions.
Eigen::VectorXd lie_bracket_vectors(const Field& t1, const Field& t2, const Point& x, const DiffConfig& cfg = {});
// Dt2 t1 - Dt1 t2.
Eigen::VectorXd lie_bracket_vectors_classical(const Field& t1, const Field& t2, const Point& x,
                                              const DiffConfig& cfg = {});
// M^-1 [M r, M s].
Eigen::VectorXd lie_bracket_forms_block(const BlockMetric& g, const Field& r, const Field& s, const Point& x,
                                        const DiffConfig& cfg = {});
// Contraction of nabla s against the vector field t in the direction slot.
Eigen::VectorXd covariant_derivative_block(const BlockConnection& c, const Field& t, const Field& s, const Point& x,
                                           const DiffConfig& cfg = {});
// Induced connection on vector fields: s(nabla_t u) = t(s(u)) - (nabla_t s)(u).
Eigen::VectorXd covariant_derivative_vectors(const BlockConnection& c, const Field& t, const Field& u,
                                             const Point& x, const DiffConfig& cfg = {});
// Torsion of the induced connection on vector fields.
Eigen::VectorXd torsion_dual_block(const BlockConnection& c, const Field& t1, const Field& t2, const Point& x,
                                   const DiffConfig& cfg = {});
// Torsion on forms: nabla_{Mr} s - nabla_{Ms} r - [r, s].
Eigen::VectorXd torsion_block(const BlockConnection& c, const BlockMetric& g, const Field& r, const Field& s,
                              const Point& x, const DiffConfig& cfg = {});
// d(s^T M t) - (nabla s) M t - (nabla t) M s.
Eigen::VectorXd metric_compat_residual_block(const BlockConnection& c, const BlockMetric& g, const Field& s,
                                             const Field& t, const Point& x, const DiffConfig& cfg = {});
// nabla(h s) - dh (x) s - h nabla s.
Eigen::MatrixXd leibniz_residual_block(const BlockConnection& c, const Field& h, const Field& s, const Point& x,
                                       const DiffConfig& cfg = {});

// Both torsions vanish on every pair of the given fields at every point.
CheckResult check_symmetric_block(const BlockConnection& c, const BlockMetric& g, const std::vector<Field>& sections,
                                  const std::vector<Point>& points, const DiffConfig& cfg = {},
                                  const Tolerances& tol = {});
CheckResult check_metric_compatible_block(const BlockConnection& c, const BlockMetric& g,
                                          const std::vector<Field>& sections, const std::vector<Point>& points,
                                          const DiffConfig& cfg = {}, const Tolerances& tol = {});

// Levi-Civita connection of a block metric from the Koszul identity in the
// coordinate frame.
BlockConnection koszul_solve(const BlockMetric& g, const DiffConfig& cfg = {});
// Closed-form Christoffel symbols of the dual Gram, exact derivatives.
BlockConnection christoffel_oracle(const BlockMetric& g);

// Value of a glued Lambda^1 (x) Lambda^1 section: components against the
// tensor square of the fibre basis, direction slot first.
struct TensorValue {
  FibrePtr fibre;
  Eigen::MatrixXd c;
  bool matched = false;
  double residual = 0.0;
};

// Element of F (x) F whose block projections are (a1, a2).  Uses the matched
// sector when a1 = Df^T a2 Df, otherwise the minimum-norm solution; throws
// IncompatiblePair when no element projects onto the pair.
TensorValue lift_tensor(const FibrePtr& fibre, const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2,
                        double tol = 1e-9);
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> project_tensor(const FibreModel& fibre, const Eigen::MatrixXd& c);

CheckResult check_connections_compatible(const GluedSpace& space, const BlockConnection& c1,
                                         const BlockConnection& c2, const SectionFamily& family,
                                         const SamplePlan& plan = {}, const DiffConfig& cfg = {});

class GluedConnection {
 public:
  GluedConnection(GluedMetric g, BlockConnection c1, BlockConnection c2, DiffConfig cfg = {});

  const SpacePtr& space() const { return g_.space(); }
  const GluedMetric& metric() const { return g_; }
  const BlockConnection& c1() const { return c1_; }
  const BlockConnection& c2() const { return c2_; }
  const DiffConfig& config() const { return cfg_; }

  TensorValue apply(const LambdaSection& s, const FibrePtr& fibre) const;

 private:
  GluedMetric g_;
  BlockConnection c1_, c2_;
  DiffConfig cfg_;
};

GluedConnection glue_connections(const GluedMetric& g, BlockConnection c1, BlockConnection c2,
                                 const SamplePlan& plan = {}, const DiffConfig& cfg = {});

// Section of the dual of the glued cotangent bundle: either a pair of block
// vector fields, or the image of a form under the metric pairing.
class DualSection {
 public:
  static DualSection from_splits(SpacePtr space, Field t1, Field t2);
  static DualSection pairing(const GluedMetric& g, const LambdaSection& r);

  const SpacePtr& space() const { return space_; }
  const Field& t1() const { return t1_; }
  const Field& t2() const { return t2_; }
  // Components against the dual of the fibre basis.
  Eigen::VectorXd eval(const FibrePtr& fibre) const;

 private:
  SpacePtr space_;
  Field t1_, t2_;
  std::optional<GluedMetric> g_;
  std::optional<LambdaSection> form_;
};

// t(x)(dh(x)) directly, and the glued function it defines.
double action(const DualSection& t, const GluedFunction& h, const FibrePtr& fibre, const DiffConfig& cfg = {});
GluedFunction action_function(const DualSection& t, const GluedFunction& h, const DiffConfig& cfg = {});
// Block formula: t1(h1), t2(h2), and their average on the locus.
double action_split(const DualSection& t, const GluedFunction& h, const FibrePtr& fibre, const DiffConfig& cfg = {});

// [a, b] evaluated through its action on test functions with prescribed
// differentials at the point.
DualElement lie_bracket_dual(const DualSection& a, const DualSection& b, const FibrePtr& fibre,
                             const DiffConfig& cfg = {});
FibreElement lie_bracket_forms(const GluedMetric& g, const LambdaSection& r, const LambdaSection& s,
                               const FibrePtr& fibre, const DiffConfig& cfg = {});
// Block brackets, paired on the locus.
FibreElement lie_bracket_forms_split(const GluedMetric& g, const LambdaSection& r, const LambdaSection& s,
                                     const FibrePtr& fibre, const DiffConfig& cfg = {});

FibreElement covariant_derivative(const GluedConnection& c, const DualSection& t, const LambdaSection& s,
                                  const FibrePtr& fibre);
FibreElement covariant_derivative_split(const GluedConnection& c, const DualSection& t, const LambdaSection& s,
                                        const FibrePtr& fibre);

FibreElement torsion(const GluedConnection& c, const LambdaSection& r, const LambdaSection& s,
                     const FibrePtr& fibre);
// Block torsions, paired on the locus; `weighted` halves the locus value.
FibreElement torsion_split(const GluedConnection& c, const LambdaSection& r, const LambdaSection& s,
                           const FibrePtr& fibre, bool weighted = false);

// Block components of d(g(s,t)) - g(nabla s, t) - g(s, nabla t).
Eigen::VectorXd metric_compat_residual(const GluedConnection& c, const LambdaSection& s, const LambdaSection& t,
                                       const FibrePtr& fibre);
// Largest block component of nabla(h s) - dh (x) s - h nabla s.
double leibniz_residual(const GluedConnection& c, const GluedFunction& h, const LambdaSection& s,
                        const FibrePtr& fibre);

// Block components of a fibre element, block 1 first.
Eigen::VectorXd block_components(const FibreElement& e);

CheckResult check_symmetric(const GluedConnection& c, const SectionFamily& family,
                            const std::vector<GluedPoint>& points);
CheckResult check_metric_compatible(const GluedConnection& c, const SectionFamily& family,
                                    const std::vector<GluedPoint>& points);
CheckResult check_leibniz(const GluedConnection& c, const FunctionFamily& functions, const SectionFamily& family,
                          const std::vector<GluedPoint>& points);

}  // namespace dglue
