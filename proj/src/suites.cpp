#include "dglue/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dglue {

ScenarioContext::ScenarioContext(Scenario sc) : sc_(std::move(sc)) {}

template <typename T, typename F>
const T& ScenarioContext::get(Slot<T>& slot, F make) {
  if (slot.error) std::rethrow_exception(slot.error);
  if (!slot.value) {
    try {
      slot.value.emplace(make());
    } catch (...) {
      slot.error = std::current_exception();
      throw;
    }
  }
  return *slot.value;
}

const SpacePtr& ScenarioContext::space() {
  return get(space_, [&] {
    return build_glued_space(sc_.block1, sc_.block2, sc_.locus, sc_.gluing, sc_.hypotheses, sc_.plan, sc_.tol);
  });
}

const BlockMetric& ScenarioContext::g1() {
  return get(g1_, [&] {
    if (!sc_.has_metrics) throw Error(ErrorCode::ValidationError, "scenario declares no metrics");
    return BlockMetric(Field::from_exprs(sc_.block1.dim(), sc_.gram1));
  });
}

const BlockMetric& ScenarioContext::g2() {
  return get(g2_, [&] {
    if (!sc_.has_metrics) throw Error(ErrorCode::ValidationError, "scenario declares no metrics");
    return BlockMetric(Field::from_exprs(sc_.block2.dim(), sc_.gram2));
  });
}

const GluedMetric& ScenarioContext::metric() {
  return get(metric_, [&] { return glue_metrics(space(), g1(), g2(), sc_.plan); });
}

const BlockConnection& ScenarioContext::c1() {
  return get(c1_, [&] {
    switch (sc_.connections) {
      case ConnectionKind::LeviCivita:
        return koszul_solve(g1(), sc_.diff);
      case ConnectionKind::Explicit:
        return BlockConnection::from_exprs(sc_.block1.dim(), sc_.christoffel1);
      case ConnectionKind::None:
        break;
    }
    throw Error(ErrorCode::ValidationError, "scenario declares no connections");
  });
}

const BlockConnection& ScenarioContext::c2() {
  return get(c2_, [&] {
    switch (sc_.connections) {
      case ConnectionKind::LeviCivita:
        return koszul_solve(g2(), sc_.diff);
      case ConnectionKind::Explicit:
        return BlockConnection::from_exprs(sc_.block2.dim(), sc_.christoffel2);
      case ConnectionKind::None:
        break;
    }
    throw Error(ErrorCode::ValidationError, "scenario declares no connections");
  });
}

const GluedConnection& ScenarioContext::connection() {
  return *get(conn_, [&] {
    return std::make_shared<GluedConnection>(glue_connections(metric(), c1(), c2(), sc_.plan, sc_.diff));
  });
}

const std::vector<GluedPoint>& ScenarioContext::points() {
  return get(points_, [&] { return space()->samples(sc_.plan).all(); });
}

const SectionFamily& ScenarioContext::coherent() {
  return get(coherent_, [&] { return coherent_sections(space(), sc_.plan); });
}

const SectionFamily& ScenarioContext::compatible() {
  return get(compatible_, [&] { return compatible_sections(space(), sc_.plan); });
}

const FunctionFamily& ScenarioContext::functions() {
  return get(functions_, [&] { return glued_functions(space(), sc_.plan); });
}

namespace {

constexpr double kTrustTol = 1e-6;

double scale_of(const Eigen::MatrixXd& m) { return std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 0.0); }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string fmt_vec(const Eigen::VectorXd& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v(i));
  return s + ")";
}

double calculus_tol(ScenarioContext& ctx) { return ctx.scenario().tol.calculus(ctx.scenario().diff.mode); }

void fail_with(SuiteResult& r, const std::string& location, const std::string& detail, double residual = 0.0) {
  r.passed = false;
  if (r.check.witnesses.size() < CheckResult::kMaxWitnesses) r.check.witnesses.push_back({location, detail, residual});
}

// Fields whose derivatives a suite relies on, per block.
struct TrustSet {
  std::vector<Field> block1, block2;
  void add_sections(const SectionFamily& fam) {
    for (const auto& s : fam.sections) {
      block1.push_back(s.s1());
      block2.push_back(s.s2());
    }
  }
};

// Dual and finite-difference derivatives must agree at every point a suite
// evaluates.
void check_trust(SuiteResult& r, ScenarioContext& ctx, const TrustSet& t, const std::vector<GluedPoint>& pts) {
  const auto& space = *ctx.space();
  const double step = ctx.scenario().diff.fd_step;
  auto run = [&](const std::vector<Field>& fs, const Point& x, const std::string& where) {
    for (size_t i = 0; i < fs.size(); ++i) {
      auto c = fd_cross_check(fs[i], x, step);
      r.fd_max_discrepancy = std::max(r.fd_max_discrepancy, c.discrepancy);
      if (!(c.discrepancy <= kTrustTol)) {
        fail_with(r, where, "dual and finite-difference derivatives of field " + std::to_string(i) + " differ by " +
                                fmt(c.discrepancy), c.discrepancy);
      }
    }
  };
  for (const auto& p : pts) {
    const std::string where = format_point(p);
    if (p.region != Region::Block2Only) run(t.block1, p.coords, where);
    if (p.region == Region::Block2Only) run(t.block2, p.coords, where);
    if (p.region == Region::Locus) run(t.block2, space.forward(p.coords), where);
    ++r.fd_points;
  }
}

// Runs a suite body, turning library errors into a failing witness.
template <typename F>
void guarded(SuiteResult& r, F body) {
  try {
    body();
  } catch (const Error& e) {
    fail_with(r, "", e.what());
  }
}

int expected_locus_dim(const GluedSpace& s) {
  switch (s.locus().kind()) {
    case LocusKind::PointSet:
      return s.n1() + s.n2();
    case LocusKind::OpenSubdomain:
      return s.n2();
    case LocusKind::Submanifold:
      return s.n1() + s.n2() - s.locus().param_dim();
  }
  return 0;
}

void suite_fibres(SuiteResult& r, ScenarioContext& ctx) {
  const auto& space = *ctx.space();
  const auto& sc = ctx.scenario();
  std::map<Region, std::set<int>> dims;
  for (const auto& p : ctx.points()) {
    auto fib = compute_fibre(space, p, sc.diff);
    const int expected =
        p.region == Region::Block1Only ? space.n1() : p.region == Region::Block2Only ? space.n2() : expected_locus_dim(space);
    dims[p.region].insert(fib->dim());
    r.check.record(std::abs(fib->dim() - expected), 0.0, format_point(p),
                   "fibre dim " + std::to_string(fib->dim()) + ", expected " + std::to_string(expected));
    if (fib->on_locus()) {
      double rel = fib->relations.size() ? max_abs(fib->relations * fib->basis) : 0.0;
      r.check.record(rel, sc.tol.numeric * scale_of(fib->relations), format_point(p),
                     "basis violates the locus relations by " + fmt(rel));
      // Matched pairs (Df^T b, b) lie in the fibre.
      Eigen::MatrixXd m = fib->basis * fib->matched;
      Eigen::MatrixXd want(space.n1() + space.n2(), space.n2());
      want << fib->jacobian.transpose(), Eigen::MatrixXd::Identity(space.n2(), space.n2());
      double d = max_abs(m - want);
      r.check.record(d, sc.tol.numeric * scale_of(want), format_point(p), "matched sector is off by " + fmt(d));
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(fib->basis);
    lu.setThreshold(sc.tol.sigma_cutoff);
    r.check.record(std::abs(lu.rank() - fib->dim()), 0.0, format_point(p), "fibre basis is rank deficient");
  }
  auto name = [](Region g) { return std::string(region_name(g)); };
  for (const auto& [reg, ds] : dims) {
    std::string s;
    for (int d : ds) s += (s.empty() ? "" : ",") + std::to_string(d);
    r.notes.push_back("fibre dims over " + name(reg) + ": " + s);
  }
  TrustSet t;
  t.block1.push_back(space.gluing().forward);
  std::vector<GluedPoint> locus;
  for (const auto& p : ctx.points()) {
    if (p.region == Region::Locus) locus.push_back(p);
  }
  check_trust(r, ctx, t, locus);
}

void suite_metric_gluing(SuiteResult& r, ScenarioContext& ctx) {
  const auto& space = *ctx.space();
  const auto& sc = ctx.scenario();
  auto compat = check_metrics_compatible(space, ctx.g1(), ctx.g2(), sc.plan);
  r.check.merge(compat);
  if (!compat.ok) {
    r.notes.push_back("block metrics disagree on the locus; glued metric not formed");
    return;
  }
  const auto& g = ctx.metric();
  const auto dual = dual_metric(g);
  Rng rng(sc.plan.seed ^ 0xd0a1ULL);
  double min_ratio = 1.0;
  for (const auto& p : ctx.points()) {
    auto fib = compute_fibre(space, p, sc.diff);
    const std::string where = format_point(p);
    Eigen::MatrixXd gram = g.gram(*fib);
    const double gs = scale_of(gram);
    double asym = max_abs(gram - gram.transpose());
    r.check.record(asym, sc.tol.symmetry * gs, where, "Gram asymmetry " + fmt(asym));
    double ratio = definiteness_ratio(gram);
    min_ratio = std::min(min_ratio, ratio);
    r.check.record(ratio > sc.tol.pd_floor ? 0.0 : 1.0, 0.0, where,
                   "Gram is not positive definite, eigenvalue ratio " + fmt(ratio));
    if (ratio <= sc.tol.pd_floor) continue;
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd a(fib->dim()), b(fib->dim());
      for (int i = 0; i < fib->dim(); ++i) a(i) = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < fib->dim(); ++i) b(i) = rng.uniform(-1.0, 1.0);
      FibreElement v{fib, a}, w{fib, b};
      auto pv = pairing_apply(g, v), pw = pairing_apply(g, w);
      double lhs = dual.eval(pv, pw), rhs = g.eval(v, w);
      double scale = std::max(1.0, gs);
      r.check.record(std::abs(lhs - rhs), sc.tol.pairing * scale, where,
                     "dual metric of paired elements " + fmt_vec(a) + ", " + fmt_vec(b) + " gives " + fmt(lhs) +
                         " against " + fmt(rhs));
      double rt = max_abs(pairing_invert(g, pv).c - a);
      r.check.record(rt, sc.tol.pairing * scale, where, "pairing round trip of " + fmt_vec(a) + " is off by " + fmt(rt));
    }
  }
  r.notes.push_back("smallest Gram eigenvalue ratio " + fmt(min_ratio));
  TrustSet t;
  t.block1.push_back(ctx.g1().gram());
  t.block2.push_back(ctx.g2().gram());
  check_trust(r, ctx, t, ctx.points());
}

TrustSet connection_trust(ScenarioContext& ctx, const SectionFamily& fam) {
  TrustSet t;
  t.block1 = {ctx.g1().gram(), ctx.c1().christoffel()};
  t.block2 = {ctx.g2().gram(), ctx.c2().christoffel()};
  t.add_sections(fam);
  return t;
}

// Block-1 component of nabla s at a point.
Eigen::MatrixXd nabla_block1(const GluedConnection& c, const LambdaSection& s, const GluedPoint& p) {
  auto fib = compute_fibre(*c.space(), p, c.config());
  return project_tensor(*fib, c.apply(s, fib).c).first;
}

void suite_leibniz(SuiteResult& r, ScenarioContext& ctx) {
  const auto& sc = ctx.scenario();
  auto compat = check_connections_compatible(*ctx.space(), ctx.c1(), ctx.c2(), ctx.compatible(), sc.plan, sc.diff);
  r.check.merge(compat);
  if (!compat.ok) {
    r.notes.push_back("factor connections disagree on the locus; glued connection not formed");
    return;
  }
  const auto& c = ctx.connection();
  const auto& fam = ctx.compatible();
  const auto& fns = ctx.functions();
  r.check.merge(check_leibniz(c, fns, fam, ctx.points()));
  r.notes.push_back(std::to_string(fns.functions.size() * fam.sections.size()) + " (h, s) pairs per point");

  // Additivity on neighbouring pairs.
  const double eps = calculus_tol(ctx);
  const auto space = ctx.space();
  for (const auto& p : ctx.points()) {
    auto fib = compute_fibre(*space, p, sc.diff);
    for (size_t a = 0; a + 1 < fam.sections.size(); ++a) {
      const auto& s = fam.sections[a];
      const auto& t = fam.sections[a + 1];
      auto sum = LambdaSection::unchecked(space, add(s.s1(), t.s1()), add(s.s2(), t.s2()));
      auto [u1, u2] = project_tensor(*fib, c.apply(sum, fib).c);
      auto [v1, v2] = project_tensor(*fib, c.apply(s, fib).c);
      auto [w1, w2] = project_tensor(*fib, c.apply(t, fib).c);
      double d = std::max(u1.size() ? max_abs(u1 - v1 - w1) : 0.0, u2.size() ? max_abs(u2 - v2 - w2) : 0.0);
      double scale = std::max({scale_of(u1), scale_of(u2), 1.0});
      r.check.record(d, eps * scale, format_point(p),
                     "additivity of (" + fam.labels[a] + ", " + fam.labels[a + 1] + ") fails by " + fmt(d));
    }
  }

  // Continuity of the glued operator when approaching the locus: the locus
  // value is the block formula there, and the offsets along each probe
  // extrapolate to zero.
  CheckResult cont;
  for (const auto& p : ctx.points()) {
    if (p.region != Region::Locus) continue;
    for (size_t a = 0; a < std::min<size_t>(fam.sections.size(), 3); ++a) {
      const auto& s = fam.sections[a];
      Eigen::MatrixXd at = nabla_block1(c, s, p);
      Eigen::MatrixXd block = ctx.c1().apply_at(s.s1(), p.coords, sc.diff);
      double d = max_abs(at - block);
      r.check.record(d, eps * scale_of(block), format_point(p),
                     "nabla(" + fam.labels[a] + ") on the locus differs from the block formula by " + fmt(d));
      for (const auto& seq : space->probes(p, sc.plan)) {
        const size_t m = seq.size();
        if (m < 3) continue;
        Eigen::MatrixXd d1 = nabla_block1(c, s, seq[m - 1]) - at;
        Eigen::MatrixXd d2 = nabla_block1(c, s, seq[m - 2]) - at;
        Eigen::MatrixXd d4 = nabla_block1(c, s, seq[m - 3]) - at;
        double jump = max_abs((8.0 * d1 - 6.0 * d2 + d4) / 3.0);
        cont.record(jump, 1e-4 * scale_of(at), format_point(p),
                    "nabla(" + fam.labels[a] + ") jumps by " + fmt(jump) + " towards " + format_point(seq.back()));
      }
    }
  }
  for (const auto& w : cont.witnesses) fail_with(r, w.location, w.detail, w.residual);
  r.notes.push_back(std::to_string(cont.samples) + " probe sequences towards the locus, largest extrapolated jump " +
                    fmt(cont.max_residual));
  TrustSet t = connection_trust(ctx, fam);
  for (const auto& h : fns.functions) {
    t.block1.push_back(h.h1());
    t.block2.push_back(h.h2());
  }
  check_trust(r, ctx, t, ctx.points());
}

void suite_symmetry(SuiteResult& r, ScenarioContext& ctx) {
  r.check.merge(check_symmetric(ctx.connection(), ctx.coherent(), ctx.points()));
  check_trust(r, ctx, connection_trust(ctx, ctx.coherent()), ctx.points());
}

void suite_metric_compat(SuiteResult& r, ScenarioContext& ctx) {
  r.check.merge(check_metric_compatible(ctx.connection(), ctx.coherent(), ctx.points()));
  check_trust(r, ctx, connection_trust(ctx, ctx.coherent()), ctx.points());
}

// Direct definition against the block formulas, over pairs of the coherent
// family.
template <typename Direct, typename Split>
void compare_split(SuiteResult& r, ScenarioContext& ctx, bool ordered, const std::string& what, Direct direct,
                   Split split) {
  const auto& fam = ctx.coherent();
  const auto& g = ctx.metric();
  const double eps = calculus_tol(ctx);
  for (const auto& p : ctx.points()) {
    auto fib = compute_fibre(*ctx.space(), p, ctx.scenario().diff);
    const double gs = scale_of(g.gram(*fib));
    for (size_t a = 0; a < fam.sections.size(); ++a) {
      for (size_t b = ordered ? 0 : a + 1; b < fam.sections.size(); ++b) {
        if (ordered && a == b) continue;
        Eigen::VectorXd d = block_components(direct(fam.sections[a], fam.sections[b], fib));
        Eigen::VectorXd s = block_components(split(fam.sections[a], fam.sections[b], fib));
        double res = max_abs(d - s);
        double scale = std::max(scale_of(block_components(fam.sections[a].eval(fib))),
                                scale_of(block_components(fam.sections[b].eval(fib))));
        r.check.record(res, eps * scale * scale * gs, format_point(p),
                       what + " of (" + fam.labels[a] + ", " + fam.labels[b] + "): direct " + fmt_vec(d) +
                           ", block formula " + fmt_vec(s));
      }
    }
  }
}

void suite_bracket_split(SuiteResult& r, ScenarioContext& ctx) {
  const auto& g = ctx.metric();
  const auto cfg = ctx.scenario().diff;
  compare_split(
      r, ctx, false, "bracket",
      [&](const LambdaSection& a, const LambdaSection& b, const FibrePtr& f) { return lie_bracket_forms(g, a, b, f, cfg); },
      [&](const LambdaSection& a, const LambdaSection& b, const FibrePtr& f) {
        return lie_bracket_forms_split(g, a, b, f, cfg);
      });
  TrustSet t;
  t.block1.push_back(ctx.g1().gram());
  t.block2.push_back(ctx.g2().gram());
  t.add_sections(ctx.coherent());
  check_trust(r, ctx, t, ctx.points());
}

void suite_covderiv_split(SuiteResult& r, ScenarioContext& ctx) {
  const auto& c = ctx.connection();
  const auto& g = ctx.metric();
  compare_split(
      r, ctx, true, "covariant derivative",
      [&](const LambdaSection& a, const LambdaSection& b, const FibrePtr& f) {
        return covariant_derivative(c, DualSection::pairing(g, a), b, f);
      },
      [&](const LambdaSection& a, const LambdaSection& b, const FibrePtr& f) {
        return covariant_derivative_split(c, DualSection::pairing(g, a), b, f);
      });
  check_trust(r, ctx, connection_trust(ctx, ctx.coherent()), ctx.points());
}

void suite_torsion_split(SuiteResult& r, ScenarioContext& ctx) {
  const auto& c = ctx.connection();
  compare_split(
      r, ctx, false, "torsion",
      [&](const LambdaSection& a, const LambdaSection& b, const FibrePtr& f) { return torsion(c, a, b, f); },
      [&](const LambdaSection& a, const LambdaSection& b, const FibrePtr& f) { return torsion_split(c, a, b, f); });
  // Same comparison against the variant that halves the locus value.
  SuiteResult weighted;
  compare_split(
      weighted, ctx, false, "torsion",
      [&](const LambdaSection& a, const LambdaSection& b, const FibrePtr& f) { return torsion(c, a, b, f); },
      [&](const LambdaSection& a, const LambdaSection& b, const FibrePtr& f) {
        return torsion_split(c, a, b, f, true);
      });
  r.notes.push_back("unweighted block formula: max residual " + fmt(r.check.max_residual) +
                    (r.check.ok ? " (matches)" : " (does not match)"));
  r.notes.push_back("halved locus formula: max residual " + fmt(weighted.check.max_residual) +
                    (weighted.check.ok ? " (matches)" : " (does not match)"));
  check_trust(r, ctx, connection_trust(ctx, ctx.coherent()), ctx.points());
}

std::vector<Field> block_sections(int n, std::uint64_t seed) {
  std::vector<Field> out;
  for (int k = 0; k < n; ++k) {
    std::vector<double> v(n, 0.0);
    v[k] = 1.0;
    out.push_back(Field::constant(n, v));
  }
  Rng rng(seed);
  for (int r = 0; r < 3; ++r) {
    std::vector<Expr> comps;
    for (int i = 0; i < n; ++i) comps.push_back(random_polynomial(n, 2, rng));
    out.push_back(Field::from_exprs(n, comps));
  }
  return out;
}

void suite_koszul(SuiteResult& r, ScenarioContext& ctx) {
  const auto& sc = ctx.scenario();
  const double tol = sc.diff.mode == DiffMode::ForwardDual ? sc.tol.calculus(DiffMode::ForwardDual) : sc.tol.koszul;
  for (int b = 1; b <= 2; ++b) {
    const BlockMetric& g = b == 1 ? ctx.g1() : ctx.g2();
    const EuclideanBlock& blk = b == 1 ? sc.block1 : sc.block2;
    const std::string tag = "block" + std::to_string(b);
    const int n = g.dim();
    auto pts = blk.grid(sc.plan.per_axis);
    auto lc = koszul_solve(g, sc.diff);
    auto oracle = christoffel_oracle(g);
    for (const auto& x : pts) {
      Eigen::VectorXd got = to_vector(lc.christoffel()(x));
      Eigen::VectorXd want = to_vector(oracle.christoffel()(x));
      double d = max_abs(got - want);
      r.check.record(d, tol * scale_of(want), tag + format_point(x),
                     "Koszul symbols " + fmt_vec(got) + " against closed form " + fmt_vec(want));
    }
    auto secs = block_sections(n, sc.plan.seed + b);
    r.check.merge(check_symmetric_block(lc, g, secs, pts, sc.diff, sc.tol));
    r.check.merge(check_metric_compatible_block(lc, g, secs, pts, sc.diff, sc.tol));

    // Any other connection fails one of the two properties.
    Rng rng(sc.plan.seed ^ (0x7a11ULL + b));
    std::vector<Point> seeds = blk.seeds();
    for (int k = 0; k < 5; ++k) {
      std::vector<double> delta(static_cast<size_t>(n) * n * n);
      for (auto& v : delta) v = rng.uniform(-0.1, 0.1);
      auto other = lc.perturbed(delta);
      bool sym = check_symmetric_block(other, g, secs, seeds, sc.diff, sc.tol).ok;
      bool comp = check_metric_compatible_block(other, g, secs, seeds, sc.diff, sc.tol).ok;
      r.check.record(sym && comp ? 1.0 : 0.0, 0.0, tag,
                     "perturbation " + std::to_string(k) + " is still symmetric and metric-compatible");
    }
    r.notes.push_back(tag + ": " + std::to_string(pts.size()) + " grid points");
  }
  TrustSet t;
  t.block1.push_back(koszul_solve(ctx.g1(), sc.diff).christoffel());
  t.block2.push_back(koszul_solve(ctx.g2(), sc.diff).christoffel());
  std::vector<GluedPoint> pts;
  for (const auto& x : sc.block1.grid(sc.plan.per_axis)) pts.push_back({Region::Block1Only, x, {}});
  for (const auto& x : sc.block2.grid(sc.plan.per_axis)) pts.push_back({Region::Block2Only, x, {}});
  check_trust(r, ctx, t, pts);
}

void suite_levi_civita(SuiteResult& r, ScenarioContext& ctx) {
  const auto& sc = ctx.scenario();
  const auto space = ctx.space();
  BlockConnection l1 = koszul_solve(ctx.g1(), sc.diff);
  BlockConnection l2 = koszul_solve(ctx.g2(), sc.diff);
  for (int b = 1; b <= 2; ++b) {
    const BlockMetric& g = b == 1 ? ctx.g1() : ctx.g2();
    const BlockConnection& l = b == 1 ? l1 : l2;
    auto pts = (b == 1 ? sc.block1 : sc.block2).grid(std::min(sc.plan.per_axis, 6));
    auto secs = block_sections(g.dim(), sc.plan.seed + 10 + b);
    r.check.merge(check_symmetric_block(l, g, secs, pts, sc.diff, sc.tol));
    r.check.merge(check_metric_compatible_block(l, g, secs, pts, sc.diff, sc.tol));
  }
  const auto& flags = space->hypotheses();
  if (!flags.pullback_equality || !flags.omega_equality) {
    r.notes.push_back("gluing hypotheses not asserted; nothing to inherit");
    return;
  }
  auto compat = check_connections_compatible(*space, l1, l2, ctx.compatible(), sc.plan, sc.diff);
  if (!compat.ok) {
    r.notes.push_back("Levi-Civita factors disagree on the locus; nothing to inherit");
    return;
  }
  GluedConnection c(ctx.metric(), l1, l2, sc.diff);
  r.check.merge(check_symmetric(c, ctx.coherent(), ctx.points()));
  r.check.merge(check_metric_compatible(c, ctx.coherent(), ctx.points()));
  TrustSet t;
  t.block1 = {ctx.g1().gram(), l1.christoffel()};
  t.block2 = {ctx.g2().gram(), l2.christoffel()};
  t.add_sections(ctx.coherent());
  check_trust(r, ctx, t, ctx.points());
}

using SuiteFn = void (*)(SuiteResult&, ScenarioContext&);

const std::map<std::string, SuiteFn>& suite_table() {
  static const std::map<std::string, SuiteFn> table = {
      {"fibres", suite_fibres},
      {"metric-gluing", suite_metric_gluing},
      {"leibniz", suite_leibniz},
      {"symmetry", suite_symmetry},
      {"metric-compat", suite_metric_compat},
      {"bracket-split", suite_bracket_split},
      {"covderiv-split", suite_covderiv_split},
      {"torsion-split", suite_torsion_split},
      {"koszul", suite_koszul},
      {"levi-civita-inheritance", suite_levi_civita},
  };
  return table;
}

}  // namespace

bool Report::passed() const {
  return std::all_of(results.begin(), results.end(), [](const SuiteResult& r) { return r.passed; });
}

Scenario apply_options(Scenario sc, const RunOptions& opts) {
  const auto& cat = suite_catalogue();
  if (!opts.suites.empty()) {
    for (const auto& s : opts.suites) {
      if (std::find(cat.begin(), cat.end(), s) == cat.end()) {
        throw Error(ErrorCode::ValidationError, "unknown suite '" + s + "'");
      }
    }
    sc.suites = opts.suites;
  }
  if (opts.mode) sc.diff.mode = *opts.mode;
  if (opts.seed) sc.plan.seed = *opts.seed;
  return sc;
}

SuiteResult run_suite(const std::string& name, ScenarioContext& ctx) {
  const auto& table = suite_table();
  auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorCode::ValidationError, "unknown suite '" + name + "'");
  SuiteResult r;
  r.suite = name;
  r.mode = mode_name(ctx.scenario().diff.mode);
  r.seed = ctx.scenario().plan.seed;
  auto start = std::chrono::steady_clock::now();
  guarded(r, [&] {
    ctx.space();
    it->second(r, ctx);
  });
  if (!r.check.ok) r.passed = false;
  if (!r.passed && r.check.witnesses.empty()) fail_with(r, "", "suite failed without a recorded sample");
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

Report run_scenario(const Scenario& scenario, const RunOptions& opts) {
  Scenario sc = apply_options(scenario, opts);
  ScenarioContext ctx(sc);
  Report rep;
  rep.scenario = sc.name;
  rep.mode = mode_name(sc.diff.mode);
  rep.seed = sc.plan.seed;
  // Catalogue order, each suite once.
  for (const auto& name : suite_catalogue()) {
    if (std::find(sc.suites.begin(), sc.suites.end(), name) != sc.suites.end()) {
      rep.results.push_back(run_suite(name, ctx));
    }
  }
  return rep;
}

std::string report_json(const Report& r, bool timing) {
  using nlohmann::json;
  json suites = json::array();
  for (const auto& s : r.results) {
    json w = json::array();
    for (const auto& x : s.check.witnesses) w.push_back({{"location", x.location}, {"detail", x.detail}, {"residual", x.residual}});
    json o = {
        {"suite", s.suite},
        {"status", s.passed ? "pass" : "fail"},
        {"max_residual", s.check.max_residual},
        {"mean_residual", s.check.mean_residual()},
        {"witnesses", w},
        {"samples", s.check.samples},
        {"mode", s.mode},
        {"seed", s.seed},
        {"fd_max_discrepancy", s.fd_max_discrepancy},
        {"fd_points", s.fd_points},
        {"notes", s.notes},
    };
    if (timing) o["wall_time_s"] = s.wall_time;
    suites.push_back(o);
  }
  json root = {{"scenario", r.scenario},
               {"mode", r.mode},
               {"seed", r.seed},
               {"status", r.passed() ? "pass" : "fail"},
               {"suites", suites}};
  return root.dump(2) + "\n";
}

std::string report_text(const Report& r) {
  std::ostringstream os;
  os << "scenario " << r.scenario << "  mode " << r.mode << "  seed " << r.seed << "\n";
  int passed = 0;
  for (const auto& s : r.results) {
    passed += s.passed;
    os << std::left << std::setw(26) << s.suite << (s.passed ? "PASS" : "FAIL") << "  max " << std::scientific
       << std::setprecision(2) << s.check.max_residual << "  mean " << s.check.mean_residual() << "  samples "
       << s.check.samples << "  fd " << s.fd_max_discrepancy << std::defaultfloat << "  " << std::fixed
       << std::setprecision(2) << s.wall_time << "s" << std::defaultfloat << "\n";
    for (const auto& n : s.notes) os << "    note: " << n << "\n";
    for (const auto& w : s.check.witnesses) {
      os << "    witness";
      if (!w.location.empty()) os << " at " << w.location;
      os << ": " << w.detail << "\n";
    }
  }
  os << (r.passed() ? "PASS" : "FAIL") << " (" << passed << "/" << r.results.size() << " suites)\n";
  return os.str();
}

namespace {

std::string fmt_matrix(const Eigen::MatrixXd& m) {
  if (m.rows() == m.cols() && m.isDiagonal(0.0)) {
    std::string s = "diag(";
    for (Eigen::Index i = 0; i < m.rows(); ++i) s += (i ? "," : "") + fmt(m(i, i));
    return s + ")";
  }
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    s += i ? ", [" : "[";
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += (j ? ", " : "") + fmt(m(i, j));
    s += "]";
  }
  return s + "]";
}

void print_christoffel(std::ostream& os, const std::string& tag, const BlockConnection& c, const Point& x) {
  const int n = c.dim();
  auto v = c.christoffel()(x);
  os << "christoffel " << tag << " at " << format_point(x) << ":";
  for (int k = 0; k < n; ++k) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m(i, j) = v[static_cast<size_t>(k) * n * n + i * n + j];
    }
    os << (k ? "," : "") << " k=" << k << " " << fmt_matrix(m);
  }
  os << "\n";
}

}  // namespace

std::string inspect_point(const Scenario& sc, const std::string& point_spec) {
  ScenarioContext ctx(sc);
  const auto& space = *ctx.space();
  GluedPoint p = parse_point(space, point_spec);
  auto fib = compute_fibre(space, p, sc.diff);
  std::ostringstream os;
  os << "point " << format_point(p) << "\n";
  os << "fibre dim " << fib->dim() << "\n";
  os << "basis ";
  for (int c = 0; c < fib->dim(); ++c) os << (c ? "," : "") << fmt_vec(fib->basis.col(c));
  os << "\n";
  if (sc.has_metrics) os << "gram " << fmt_matrix(ctx.metric().gram(*fib)) << "\n";
  if (sc.connections != ConnectionKind::None) {
    if (p.region != Region::Block2Only) print_christoffel(os, "block1", ctx.c1(), p.coords);
    if (p.region == Region::Block2Only) print_christoffel(os, "block2", ctx.c2(), p.coords);
    if (p.region == Region::Locus) print_christoffel(os, "block2", ctx.c2(), fib->image);
  }
  return os.str();
}

}  // namespace dglue
