#include "dglue/forms.hpp"

#include <cmath>

namespace dglue {

namespace {

double vec_scale(const Eigen::VectorXd& v) { return std::max(1.0, v.size() ? v.cwiseAbs().maxCoeff() : 0.0); }

Eigen::VectorXd stack(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd v(a.size() + b.size());
  v << a, b;
  return v;
}

}  // namespace

Field differential_block(const Field& h, const DiffConfig& cfg) {
  if (h.out_dim() != 1) throw Error(ErrorCode::DimensionMismatch, "differential expects a scalar field");
  return Field::lift<1>(h.in_dim(), h.in_dim(), h.max_level(),
                        [h, cfg]<typename T>(std::span<const T> x) { return gradient(h, x, cfg); });
}

Field pullback(const Field& form, const Field& map, const DiffConfig& cfg) {
  if (form.out_dim() != map.out_dim() || form.in_dim() != map.out_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "pullback shape mismatch");
  }
  const int m = map.in_dim();
  const int n = map.out_dim();
  auto eval = [form, map, cfg, m, n]<typename T>(std::span<const T> x) {
    auto y = map(x);
    auto w = form(std::span<const T>(y));
    auto j = jacobian(map, x, cfg);
    std::vector<T> out(m, T(0.0));
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < n; ++k) out[i] = out[i] + j[k * m + i] * w[k];
    }
    return out;
  };
  return Field::lift<1>(m, m, std::min(form.max_level() + 1, map.max_level()), eval);
}

Point evaluate_on_plot(const Field& form, const Plot& plot, const Point& t, const DiffConfig& cfg) {
  return pullback(form, plot.map, cfg)(t);
}

bool plot_is_smooth(const Plot& plot, const Point& t, int steps) {
  const int k = plot.map.in_dim();
  for (int i = 0; i < k; ++i) {
    double h = 0.1;
    std::vector<double> prev;
    double prev_gap = std::numeric_limits<double>::infinity();
    for (int s = 0; s < steps; ++s, h *= 0.5) {
      Point tp = t, tm = t;
      tp[i] += h;
      tm[i] -= h;
      auto a = plot.map(tp);
      auto b = plot.map(tm);
      std::vector<double> q(a.size());
      for (size_t r = 0; r < a.size(); ++r) {
        q[r] = (a[r] - b[r]) / (2 * h);
        if (!std::isfinite(q[r])) return false;
      }
      if (!prev.empty()) {
        double gap = 0.0;
        for (size_t r = 0; r < q.size(); ++r) gap = std::max(gap, std::abs(q[r] - prev[r]));
        if (gap > 1e-12 && gap > 0.5 * prev_gap) return false;
        prev_gap = gap;
      }
      prev = q;
    }
  }
  return true;
}

bool form_vanishes_at(const Field& form, const Point& x, double tol, std::uint64_t seed) {
  const int n = form.in_dim();
  Rng rng(seed);
  std::vector<Point> directions;
  for (int i = 0; i < n; ++i) {
    Point e(n, 0.0);
    e[i] = 1.0;
    directions.push_back(e);
  }
  for (int r = 0; r < 3; ++r) {
    Point v(n);
    for (auto& c : v) c = rng.uniform(-1.0, 1.0);
    directions.push_back(v);
  }
  for (const auto& v : directions) {
    std::vector<Expr> comps;
    for (int i = 0; i < n; ++i) comps.push_back(Expr(x[i]) + Expr(v[i]) * Expr::var(0));
    Plot p{BlockTag::First, Field::from_exprs(1, comps), x};
    if (std::abs(evaluate_on_plot(form, p, {0.0})[0]) > tol) return false;
  }
  return true;
}

CheckResult check_forms_compatible(const GluedSpace& space, const Field& form1, const Field& form2,
                                   const SamplePlan& plan, const DiffConfig& cfg) {
  CheckResult res;
  for (const auto& gp : space.locus_samples(plan)) {
    Eigen::MatrixXd v = space.locus_tangent(gp, cfg);
    if (v.cols() == 0) {
      res.record(0.0, 0.0, format_point(gp), "point locus");
      continue;
    }
    Eigen::MatrixXd j = space.gluing_jacobian(gp.coords, cfg);
    Eigen::VectorXd w1 = to_vector(form1(gp.coords));
    Eigen::VectorXd w2 = to_vector(form2(space.forward(gp.coords)));
    Eigen::VectorXd lhs = v.transpose() * w1;
    Eigen::VectorXd rhs = (j * v).transpose() * w2;
    double r = (lhs - rhs).cwiseAbs().maxCoeff();
    res.record(r, space.tolerances().numeric * std::max(vec_scale(lhs), vec_scale(rhs)), format_point(gp),
               "restrictions to the locus differ");
  }
  return res;
}

Eigen::MatrixXd FibreModel::rho1() const {
  if (kind == FibreKind::Block2Fibre) {
    throw Error(ErrorCode::OutsideDomain, "block-1 restriction is undefined at " + format_point(point));
  }
  return basis.topRows(n1);
}

Eigen::MatrixXd FibreModel::rho2() const {
  if (kind == FibreKind::Block1Fibre) {
    throw Error(ErrorCode::OutsideDomain, "block-2 restriction is undefined at " + format_point(point));
  }
  return basis.bottomRows(n2);
}

Point FibreModel::block1_coords() const {
  if (kind == FibreKind::Block2Fibre) throw Error(ErrorCode::NotInImage, format_point(point) + " is not in block 1");
  return point.coords;
}

Point FibreModel::block2_coords() const {
  if (kind == FibreKind::Block1Fibre) throw Error(ErrorCode::NotInImage, format_point(point) + " is not in block 2");
  return kind == FibreKind::CompatiblePairs ? image : point.coords;
}

FibrePtr compute_fibre(const GluedSpace& space, const GluedPoint& point, const DiffConfig& cfg) {
  auto f = std::make_shared<FibreModel>();
  f->point = point;
  f->n1 = space.n1();
  f->n2 = space.n2();
  switch (point.region) {
    case Region::Block1Only:
      f->kind = FibreKind::Block1Fibre;
      f->basis = Eigen::MatrixXd::Identity(f->n1, f->n1);
      return f;
    case Region::Block2Only:
      f->kind = FibreKind::Block2Fibre;
      f->basis = Eigen::MatrixXd::Identity(f->n2, f->n2);
      return f;
    case Region::Locus:
      break;
  }
  f->kind = FibreKind::CompatiblePairs;
  const int n1 = f->n1;
  const int n2 = f->n2;
  f->image = space.forward(point.coords);
  f->jacobian = space.gluing_jacobian(point.coords, cfg);
  Eigen::MatrixXd v = space.locus_tangent(point, cfg);
  Eigen::MatrixXd rel(v.cols(), n1 + n2);
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    rel.row(c).head(n1) = v.col(c).transpose();
    rel.row(c).tail(n2) = -(f->jacobian * v.col(c)).transpose();
  }
  f->relations = rel;
  f->basis = nullspace_rref(rel, n1 + n2, space.tolerances().sigma_cutoff);

  if (n1 == n2) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(f->jacobian);
    if (lu.isInvertible()) {
      Eigen::MatrixXd pairs(n1 + n2, n2);
      pairs.topRows(n1) = f->jacobian.transpose();
      pairs.bottomRows(n2) = Eigen::MatrixXd::Identity(n2, n2);
      Eigen::MatrixXd p = f->basis.colPivHouseholderQr().solve(pairs);
      if (max_abs(f->basis * p - pairs) <= 1e-9 * std::max(1.0, max_abs(pairs))) f->matched = p;
    }
  }
  return f;
}

Eigen::VectorXd rho1(const FibreElement& e) { return e.fibre->rho1() * e.c; }
Eigen::VectorXd rho2(const FibreElement& e) { return e.fibre->rho2() * e.c; }

double pair_residual(const FibreModel& fibre, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (!fibre.on_locus() || fibre.relations.rows() == 0) return 0.0;
  return (fibre.relations * stack(a, b)).cwiseAbs().maxCoeff();
}

FibreElement rho_pair_inverse(const FibrePtr& fibre, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  FibreElement e{fibre, {}};
  switch (fibre->kind) {
    case FibreKind::Block1Fibre:
      if (a.size() != fibre->n1) throw Error(ErrorCode::DimensionMismatch, "block-1 component size");
      e.c = a;
      return e;
    case FibreKind::Block2Fibre:
      if (b.size() != fibre->n2) throw Error(ErrorCode::DimensionMismatch, "block-2 component size");
      e.c = b;
      return e;
    case FibreKind::CompatiblePairs:
      break;
  }
  if (a.size() != fibre->n1 || b.size() != fibre->n2) throw Error(ErrorCode::DimensionMismatch, "pair component size");
  Eigen::VectorXd v = stack(a, b);
  if (fibre->dim() == 0) {
    e.c = Eigen::VectorXd(0);
  } else {
    e.c = fibre->basis.colPivHouseholderQr().solve(v);
  }
  double r = fibre->dim() ? (fibre->basis * e.c - v).cwiseAbs().maxCoeff() : v.cwiseAbs().maxCoeff();
  if (r > 1e-9 * vec_scale(v)) {
    throw Error(ErrorCode::IncompatiblePair, "pair does not lie in the fibre at " + format_point(fibre->point) +
                                                 " (residual " + std::to_string(r) + ")");
  }
  return e;
}

FibreElement fibre_element(const FibrePtr& fibre, const Eigen::VectorXd& block1, const Eigen::VectorXd& block2) {
  return rho_pair_inverse(fibre, block1, block2);
}

LambdaSection LambdaSection::unchecked(SpacePtr space, Field s1, Field s2) {
  if (s1.in_dim() != space->n1() || s1.out_dim() != space->n1() || s2.in_dim() != space->n2() ||
      s2.out_dim() != space->n2()) {
    throw Error(ErrorCode::DimensionMismatch, "section components must be covector fields on their blocks");
  }
  LambdaSection s;
  s.space_ = std::move(space);
  s.s1_ = std::move(s1);
  s.s2_ = std::move(s2);
  return s;
}

LambdaSection LambdaSection::assemble(SpacePtr space, Field s1, Field s2, const SamplePlan& plan) {
  LambdaSection s = unchecked(std::move(space), std::move(s1), std::move(s2));
  for (const auto& gp : s.space_->locus_samples(plan)) {
    auto fib = compute_fibre(*s.space_, gp);
    Eigen::VectorXd a = s.block1_value(*fib);
    Eigen::VectorXd b = s.block2_value(*fib);
    double r = pair_residual(*fib, a, b);
    if (r > s.space_->tolerances().numeric * std::max(vec_scale(a), vec_scale(b))) {
      throw Error(ErrorCode::IncompatibleSections,
                  "restrictions disagree on the locus at " + format_point(gp) + " (residual " + std::to_string(r) + ")");
    }
  }
  return s;
}

Eigen::VectorXd LambdaSection::block1_value(const FibreModel& fibre) const {
  return to_vector(s1_(fibre.block1_coords()));
}

Eigen::VectorXd LambdaSection::block2_value(const FibreModel& fibre) const {
  return to_vector(s2_(fibre.block2_coords()));
}

FibreElement LambdaSection::eval(const FibrePtr& fibre) const {
  switch (fibre->kind) {
    case FibreKind::Block1Fibre:
      return FibreElement{fibre, block1_value(*fibre)};
    case FibreKind::Block2Fibre:
      return FibreElement{fibre, block2_value(*fibre)};
    case FibreKind::CompatiblePairs:
      break;
  }
  return rho_pair_inverse(fibre, block1_value(*fibre), block2_value(*fibre));
}

FibreElement LambdaSection::eval(const GluedPoint& point, const DiffConfig& cfg) const {
  return eval(compute_fibre(*space_, point, cfg));
}

LambdaSection operator+(const LambdaSection& a, const LambdaSection& b) {
  return LambdaSection::unchecked(a.space(), add(a.s1(), b.s1()), add(a.s2(), b.s2()));
}

GluedFunction GluedFunction::from_splits(SpacePtr space, Field h1, Field h2, const SamplePlan& plan) {
  if (h1.in_dim() != space->n1() || h2.in_dim() != space->n2() || h1.out_dim() != 1 || h2.out_dim() != 1) {
    throw Error(ErrorCode::DimensionMismatch, "glued function components must be scalar fields on their blocks");
  }
  for (const auto& gp : space->locus_samples(plan)) {
    double a = h1(gp.coords)[0];
    double b = h2(space->forward(gp.coords))[0];
    if (std::abs(a - b) > space->tolerances().numeric * std::max({1.0, std::abs(a), std::abs(b)})) {
      throw Error(ErrorCode::NotAFunctionOnGluedSpace,
                  "restrictions differ on the locus at " + format_point(gp) + ": " + std::to_string(a) + " vs " +
                      std::to_string(b));
    }
  }
  return unchecked(std::move(space), std::move(h1), std::move(h2));
}

GluedFunction GluedFunction::unchecked(SpacePtr space, Field h1, Field h2) {
  GluedFunction g;
  g.space_ = std::move(space);
  g.h1_ = std::move(h1);
  g.h2_ = std::move(h2);
  return g;
}

GluedFunction GluedFunction::averaged(SpacePtr space, Field e1, Field e2) {
  const Field f = space->gluing().forward;
  const Field finv = space->gluing().inverse;
  SpacePtr sp = space;
  auto k1 = [sp, e1, e2, f]<typename T>(std::span<const T> p) {
    T v = e1(p)[0];
    if (sp->in_locus_at(p)) {
      auto q = f(p);
      v = (v + e2(std::span<const T>(q))[0]) * 0.5;
    }
    return std::vector<T>{v};
  };
  auto k2 = [sp, e1, e2, finv]<typename T>(std::span<const T> q) {
    T v = e2(q)[0];
    Point qv(q.size());
    for (size_t i = 0; i < q.size(); ++i) qv[i] = value_of(q[i]);
    if (sp->locus_preimage(qv)) {
      auto p = finv(q);
      v = (v + e1(std::span<const T>(p))[0]) * 0.5;
    }
    return std::vector<T>{v};
  };
  GluedFunction g;
  g.h1_ = Field::lift<0>(space->n1(), 1, min_level({&e1, &e2, &f}), k1);
  g.h2_ = Field::lift<0>(space->n2(), 1, min_level({&e1, &e2, &finv}), k2);
  g.ext1_ = scale(0.5, add(e1, compose(e2, f)));
  g.ext2_ = scale(0.5, add(e2, compose(e1, finv)));
  g.space_ = std::move(space);
  return g;
}

double GluedFunction::value(const GluedPoint& p) const {
  if (p.region == Region::Block2Only) return h2_(p.coords)[0];
  return h1_(p.coords)[0];
}

LambdaSection differential_glued(const GluedFunction& h, const DiffConfig& cfg) {
  if (h.ext1().empty()) {
    return LambdaSection::unchecked(h.space(), differential_block(h.h1(), cfg), differential_block(h.h2(), cfg));
  }
  // Averaged quantities are differentiated through their extension on locus
  // points, so every derivative mode sees the same function.
  SpacePtr sp = h.space();
  Field d1 = differential_block(h.h1(), cfg), x1 = differential_block(h.ext1(), cfg);
  Field d2 = differential_block(h.h2(), cfg), x2 = differential_block(h.ext2(), cfg);
  auto s1 = [sp, d1, x1]<typename T>(std::span<const T> p) { return sp->in_locus_at(p) ? x1(p) : d1(p); };
  auto s2 = [sp, d2, x2]<typename T>(std::span<const T> q) {
    Point qv(q.size());
    for (size_t i = 0; i < q.size(); ++i) qv[i] = value_of(q[i]);
    return sp->locus_preimage(qv) ? x2(q) : d2(q);
  };
  return LambdaSection::unchecked(sp, Field::lift<0>(sp->n1(), sp->n1(), min_level({&d1, &x1}), s1),
                                  Field::lift<0>(sp->n2(), sp->n2(), min_level({&d2, &x2}), s2));
}

LambdaSection multiply(const GluedFunction& h, const LambdaSection& s) {
  return LambdaSection::unchecked(s.space(), multiply(h.h1(), s.s1()), multiply(h.h2(), s.s2()));
}

}  // namespace dglue
