#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "dglue/suites.hpp"

using namespace dglue;

namespace {

const std::string kDir = DGLUE_SCENARIO_DIR;
const std::vector<std::string> kPassing = {"cross_flat", "cross_mixed_grams", "halfline_curved", "plane_axis_gluing"};

Scenario load(const std::string& name) { return load_scenario(kDir + "/" + name + ".json"); }

std::map<std::string, Report>& reports() {
  static std::map<std::string, Report> cache;
  return cache;
}

const Report& full_report(const std::string& name) {
  auto& c = reports();
  auto it = c.find(name);
  if (it == c.end()) it = c.emplace(name, run_scenario(load(name))).first;
  return it->second;
}

const SuiteResult& suite_of(const Report& r, const std::string& suite) {
  for (const auto& s : r.results) {
    if (s.suite == suite) return s;
  }
  throw std::runtime_error("suite " + suite + " missing from report of " + r.scenario);
}

struct Outcome {
  bool ok = true;
  std::ostringstream why;
  void require(bool cond, const std::string& msg) {
    if (!cond) {
      if (ok) why << msg;
      ok = false;
    }
  }
};

bool criterion_fibres(Outcome& o) {
  {
    ScenarioContext ctx(load("cross_flat"));
    std::map<Region, int> want = {{Region::Block1Only, 1}, {Region::Locus, 2}, {Region::Block2Only, 1}};
    std::map<Region, int> seen;
    for (const auto& p : ctx.points()) {
      int d = compute_fibre(*ctx.space(), p)->dim();
      ++seen[p.region];
      o.require(d == want[p.region], "cross_flat fibre at " + format_point(p) + " has dim " + std::to_string(d));
    }
    o.require(seen.size() == 3, "cross_flat samples miss a region");
  }
  {
    ScenarioContext ctx(load("halfline_curved"));
    int locus = 0;
    for (const auto& p : ctx.points()) {
      if (p.region != Region::Locus) continue;
      ++locus;
      auto f = compute_fibre(*ctx.space(), p);
      o.require(f->dim() == 1, "halfline locus fibre dim is not 1");
      if (f->dim() == 1) {
        double a = f->basis(0, 0), b = f->basis(1, 0);
        o.require(std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)) && a != 0.0,
                  "halfline locus basis is not proportional to (1,1) at " + format_point(p));
      }
    }
    o.require(locus > 0, "no halfline locus samples");
  }
  for (const auto& name : {"cross_flat", "halfline_curved"}) {
    o.require(suite_of(full_report(name), "fibres").passed, std::string(name) + " fibres suite failed");
  }
  return o.ok;
}

bool criterion_glued_metric(Outcome& o) {
  int checked = 0;
  for (const auto& name : {"cross_flat", "cross_mixed_grams", "halfline_curved", "plane_axis_gluing", "halfline_mismatch",
                           "halfline_incompatible_connections", "cubic_gluing"}) {
    ScenarioContext ctx(load(name));
    // Failure fixtures without a glued metric have nothing to check here.
    try {
      ctx.metric();
    } catch (const Error&) {
      continue;
    }
    for (const auto& p : ctx.points()) {
      auto f = compute_fibre(*ctx.space(), p);
      Eigen::MatrixXd g = ctx.metric().gram(*f);
      o.require(max_abs(g - g.transpose()) <= 1e-12, std::string(name) + ": asymmetric Gram at " + format_point(p));
      o.require(definiteness_ratio(g) > ctx.scenario().tol.pd_floor,
                std::string(name) + ": Gram not positive definite at " + format_point(p));
      ++checked;
    }
  }
  o.require(checked > 0, "no fibres checked");
  ScenarioContext ctx(load("cross_flat"));
  GluedPoint origin = parse_point(*ctx.space(), "locus:0");
  Eigen::MatrixXd g = ctx.metric().gram(*compute_fibre(*ctx.space(), origin));
  Eigen::MatrixXd half = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  o.require(g == half, "cross locus Gram is not exactly diag(1/2,1/2)");
  return o.ok;
}

bool criterion_koszul(Outcome& o) {
  using Closed = std::function<std::vector<double>(const Point&)>;
  struct Case {
    std::string label;
    BlockMetric g;
    Closed closed;
    Box box;
  };
  const Expr x = Expr::var(0);
  std::vector<Case> cases = {
      {"exp(2x)", BlockMetric(Field::from_expr(1, exp(Expr(2.0) * x))),
       [](const Point&) { return std::vector<double>{-1.0}; }, {{-1.5, 1.5}}},
      {"diag(1, 1+x^2)", BlockMetric(Field::from_exprs(2, {Expr(1.0), Expr(0.0), Expr(0.0), Expr(1.0) + x * x})),
       [](const Point& p) {
         const double u = p[0], q = 1.0 + u * u;
         std::vector<double> g(8, 0.0);
         g[3] = u / (q * q);
         g[5] = g[6] = -u / q;
         return g;
       },
       {{-1.5, 1.5}, {-1.5, 1.5}}},
  };
  for (const auto& c : cases) {
    for (DiffMode mode : {DiffMode::ForwardDual, DiffMode::FiniteDifference}) {
      const double tol = mode == DiffMode::ForwardDual ? 1e-10 : 1e-6;
      auto lc = koszul_solve(c.g, {mode, 1e-5});
      auto oracle = christoffel_oracle(c.g);
      double worst = 0.0;
      auto pts = cell_grid(c.box, 16);
      for (const auto& p : pts) {
        auto got = lc.christoffel()(p);
        auto lib = oracle.christoffel()(p);
        auto exact = c.closed(p);
        for (size_t i = 0; i < got.size(); ++i) {
          worst = std::max({worst, std::abs(got[i] - exact[i]), std::abs(lib[i] - exact[i])});
        }
      }
      o.require(pts.size() == (c.box.size() == 1 ? 16u : 256u), "grid does not have 16 samples per axis");
      o.require(worst <= tol, c.label + " in " + mode_name(mode) + " mode is off by " + std::to_string(worst));
    }
  }
  return o.ok;
}

bool criterion_leibniz(Outcome& o) {
  ScenarioContext ctx(load("halfline_curved"));
  const auto& fam = ctx.compatible();
  const auto& fns = ctx.functions();
  const size_t pairs = fam.sections.size() * fns.functions.size();
  o.require(pairs >= 40, "only " + std::to_string(pairs) + " (h, s) pairs");
  std::map<Region, int> seen;
  for (const auto& p : ctx.points()) ++seen[p.region];
  o.require(seen.size() == 3, "samples miss a region");
  auto res = check_leibniz(ctx.connection(), fns, fam, ctx.points());
  o.require(res.max_residual <= 1e-6, "Leibniz residual " + std::to_string(res.max_residual));
  o.require(res.ok, "Leibniz check failed");
  o.require(suite_of(full_report("halfline_curved"), "leibniz").passed, "leibniz suite failed");
  return o.ok;
}

bool criterion_splitting(Outcome& o) {
  for (const auto& name : kPassing) {
    for (const auto& suite : {"bracket-split", "covderiv-split", "torsion-split"}) {
      const auto& s = suite_of(full_report(name), suite);
      o.require(s.passed && s.check.max_residual <= 1e-6 && s.check.samples > 0,
                name + " " + suite + " max residual " + std::to_string(s.check.max_residual));
    }
  }
  return o.ok;
}

bool criterion_levi_civita(Outcome& o) {
  for (const auto& name : {"halfline_curved", "plane_axis_gluing"}) {
    const auto& s = suite_of(full_report(name), "levi-civita-inheritance");
    o.require(s.passed && s.check.max_residual <= 1e-6,
              std::string(name) + " inheritance max residual " + std::to_string(s.check.max_residual));
    for (const auto& n : s.notes) o.require(n.find("nothing to inherit") == std::string::npos, std::string(name) + ": " + n);
  }
  return o.ok;
}

bool criterion_pairing(Outcome& o) {
  for (const auto& name : kPassing) {
    ScenarioContext ctx(load(name));
    const auto& g = ctx.metric();
    auto dual = dual_metric(g);
    Rng rng(0xacce97ULL);
    for (const auto& p : ctx.points()) {
      auto f = compute_fibre(*ctx.space(), p);
      for (int k = 0; k < 4; ++k) {
        Eigen::VectorXd a(f->dim()), b(f->dim());
        for (int i = 0; i < f->dim(); ++i) a(i) = rng.uniform(-1.0, 1.0);
        for (int i = 0; i < f->dim(); ++i) b(i) = rng.uniform(-1.0, 1.0);
        FibreElement v{f, a}, w{f, b};
        auto pv = pairing_apply(g, v), pw = pairing_apply(g, w);
        double d = std::abs(dual.eval(pv, pw) - g.eval(v, w));
        double rt = max_abs(pairing_invert(g, pv).c - a);
        o.require(d <= 1e-10, name + ": duality residual " + std::to_string(d) + " at " + format_point(p));
        o.require(rt <= 1e-10, name + ": round trip residual " + std::to_string(rt) + " at " + format_point(p));
      }
    }
    o.require(suite_of(full_report(name), "metric-gluing").passed, name + " metric-gluing suite failed");
  }
  return o.ok;
}

bool criterion_negative_controls(Outcome& o) {
  const std::vector<std::pair<std::string, std::string>> failing = {
      {"halfline_mismatch", "metric-gluing"},
      {"halfline_incompatible_connections", "leibniz"},
      {"cubic_gluing", "fibres"},
  };
  for (const auto& [name, suite] : failing) {
    const auto& r = full_report(name);
    const auto& s = suite_of(r, suite);
    o.require(!s.passed, name + " unexpectedly passes " + suite);
    o.require(!s.check.witnesses.empty(), name + " fails without a witness");
  }
  const auto& mm = suite_of(full_report("halfline_mismatch"), "metric-gluing");
  if (!mm.check.witnesses.empty()) {
    const auto& w = mm.check.witnesses.front();
    o.require(w.location.find("Locus") != std::string::npos && w.detail.find("pair") != std::string::npos,
              "mismatch witness lacks the locus point or the pair");
  }
  for (const auto& name : kPassing) {
    const auto& r = full_report(name);
    o.require(r.results.size() == suite_catalogue().size(), name + " does not run the whole catalogue");
    for (const auto& s : r.results) o.require(s.passed, name + " fails " + s.suite);
  }
  return o.ok;
}

bool criterion_derivative_trust(Outcome& o) {
  const std::vector<std::string> used = {"fibres",        "metric-gluing",  "leibniz",      "symmetry",
                                         "metric-compat", "bracket-split",  "covderiv-split", "torsion-split",
                                         "levi-civita-inheritance", "koszul"};
  for (const auto& name : kPassing) {
    for (const auto& suite : used) {
      const auto& s = suite_of(full_report(name), suite);
      o.require(s.fd_points > 0, name + " " + suite + " ran no cross-check");
      o.require(s.fd_max_discrepancy <= 1e-6,
                name + " " + suite + " discrepancy " + std::to_string(s.fd_max_discrepancy));
    }
  }
  return o.ok;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string label;
    bool (*fn)(Outcome&);
  };
  const std::vector<Criterion> criteria = {
      {1, "fibre structure", criterion_fibres},
      {2, "glued metric symmetric and positive definite", criterion_glued_metric},
      {3, "Koszul solve matches closed-form Christoffel symbols", criterion_koszul},
      {4, "Leibniz rule for the glued connection", criterion_leibniz},
      {5, "splitting of brackets, covariant derivatives and torsion", criterion_splitting},
      {6, "Levi-Civita inheritance", criterion_levi_civita},
      {7, "pairing duality and round trip", criterion_pairing},
      {8, "negative controls", criterion_negative_controls},
      {9, "derivative trust", criterion_derivative_trust},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      c.fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::printf("criterion %d %s: %s", c.id, c.label.c_str(), o.ok ? "PASS" : "FAIL");
    if (!o.ok) std::printf(" (%s)", o.why.str().c_str());
    std::printf("\n");
    failed += !o.ok;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
