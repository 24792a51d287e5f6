#include "dglue/families.hpp"

#include <functional>

namespace dglue {

namespace {

Expr var(int i) { return Expr::var(i); }

// Affine description of a submanifold locus: base point and constant normal
// covectors (rows).  Empty when the locus is not an affine submanifold.
struct AffineLocus {
  bool valid = false;
  Point base;
  Eigen::MatrixXd normals;
};

AffineLocus affine_locus(const GluedSpace& space) {
  AffineLocus a;
  const auto& loc = space.locus();
  if (loc.kind() != LocusKind::Submanifold) return a;
  const Field& phi = loc.param_map();
  const int k = phi.in_dim();
  Point centre(k);
  for (int i = 0; i < k; ++i) centre[i] = 0.5 * (loc.param_box()[i].first + loc.param_box()[i].second);
  Eigen::MatrixXd v = jacobian_matrix(phi, centre);
  Point base = phi(centre);
  for (const auto& t : cell_grid(loc.param_box(), 3)) {
    if (max_abs(jacobian_matrix(phi, t) - v) > 1e-12) return a;
    Eigen::VectorXd lin = to_vector(base) + v * (to_vector(t) - to_vector(centre));
    if (max_abs(lin - to_vector(phi(t))) > 1e-12) return a;
  }
  a.valid = true;
  a.base = base;
  a.normals = nullspace_rref(v.transpose(), space.n1(), space.tolerances().sigma_cutoff).transpose();
  return a;
}

Expr squared_distance(const Point& y) {
  Expr s(0.0);
  for (size_t i = 0; i < y.size(); ++i) s = s + pow(var(static_cast<int>(i)) - Expr(y[i]), 2);
  return s;
}

// nu . (x - base)
Expr normal_coordinate(const Eigen::VectorXd& nu, const Point& base) {
  Expr s(0.0);
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    if (nu(i) != 0.0) s = s + Expr(nu(i)) * (var(static_cast<int>(i)) - Expr(base[i]));
  }
  return s;
}

Field random_covector(int n, Rng& rng) {
  std::vector<Expr> c;
  for (int i = 0; i < n; ++i) c.push_back(random_polynomial(n, 2, rng));
  return Field::from_exprs(n, c);
}

Field coordinate_covector(int n, int k) {
  std::vector<double> v(n, 0.0);
  v[k] = 1.0;
  return Field::constant(n, v);
}

Field pull_back(const GluedSpace& space, const Field& sigma, const Field& map) {
  if (sigma.exprs() && map.exprs()) {
    return Field::from_exprs(map.in_dim(), pullback_exprs(*sigma.exprs(), *map.exprs(), map.in_dim()));
  }
  (void)space;
  return pullback(sigma, map);
}

// q * eps for a scalar multiplier q and covector field eps.
Field times(const Expr& q, int n, const Field& eps) { return multiply(Field::from_expr(n, q), eps); }

}  // namespace

Expr random_polynomial(int n, int degree, Rng& rng) {
  std::vector<Monomial> terms;
  std::vector<int> e(n, 0);
  // Enumerate exponent vectors of total degree <= degree in lexicographic order.
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n) {
      terms.push_back({rng.uniform(-1.0, 1.0), e});
      return;
    }
    for (int d = 0; d <= left; ++d) {
      e[i] = d;
      rec(i + 1, left - d);
    }
    e[i] = 0;
  };
  rec(0, degree);
  return polynomial(terms);
}

std::vector<Expr> pullback_exprs(const std::vector<Expr>& form, const std::vector<Expr>& map, int in_dim) {
  std::vector<Expr> out(in_dim, Expr(0.0));
  for (size_t k = 0; k < map.size(); ++k) {
    Expr pulled = substitute(form[k], map);
    for (int j = 0; j < in_dim; ++j) out[j] = out[j] + derivative(map[k], j) * pulled;
  }
  return out;
}

Expr locus_multiplier(const GluedSpace& space) {
  const auto& loc = space.locus();
  switch (loc.kind()) {
    case LocusKind::OpenSubdomain:
      return Expr(0.0);
    case LocusKind::PointSet: {
      Expr q(1.0);
      for (const auto& y : loc.points()) q = q * pow(squared_distance(y), 2);
      return q;
    }
    case LocusKind::Submanifold: {
      auto a = affine_locus(space);
      if (!a.valid || a.normals.rows() == 0) return Expr(0.0);
      Expr s(0.0);
      for (Eigen::Index r = 0; r < a.normals.rows(); ++r) s = s + pow(normal_coordinate(a.normals.row(r), a.base), 2);
      return pow(s, 2);
    }
  }
  return Expr(0.0);
}

SectionFamily coherent_sections(const SpacePtr& space, const SamplePlan& plan) {
  const int n1 = space->n1(), n2 = space->n2();
  const Field& f = space->gluing().forward;
  const Field& finv = space->gluing().inverse;
  Expr q1e = locus_multiplier(*space);
  const auto kind = space->locus().kind();
  const bool has_free = kind == LocusKind::PointSet ||
                        (kind == LocusKind::Submanifold && affine_locus(*space).normals.rows() > 0);
  Field q2 = compose(Field::from_expr(n1, q1e), finv);

  SectionFamily fam;
  for (int k = 0; k < n2; ++k) {
    Field sigma = coordinate_covector(n2, k);
    fam.sections.push_back(LambdaSection::assemble(space, pull_back(*space, sigma, f), sigma, plan));
    fam.labels.push_back("coordinate " + std::to_string(k));
  }
  Rng rng(plan.seed);
  for (int r = 0; r < plan.random_sections; ++r) {
    Field sigma = random_covector(n2, rng);
    Field s1 = pull_back(*space, sigma, f);
    Field s2 = sigma;
    if (has_free) {
      s1 = add(s1, times(q1e, n1, random_covector(n1, rng)));
      s2 = add(s2, multiply(q2, random_covector(n2, rng)));
    }
    fam.sections.push_back(LambdaSection::assemble(space, s1, s2, plan));
    fam.labels.push_back("random " + std::to_string(r));
  }
  return fam;
}

SectionFamily compatible_sections(const SpacePtr& space, const SamplePlan& plan) {
  SectionFamily fam = coherent_sections(space, plan);
  const int n1 = space->n1(), n2 = space->n2();
  Rng rng(plan.seed ^ 0x5eed5eedULL);
  const auto kind = space->locus().kind();
  if (kind == LocusKind::PointSet) {
    for (int r = 0; r < plan.random_sections; ++r) {
      fam.sections.push_back(LambdaSection::assemble(space, random_covector(n1, rng), random_covector(n2, rng), plan));
      fam.labels.push_back("independent " + std::to_string(r));
    }
  } else if (kind == LocusKind::Submanifold) {
    auto a = affine_locus(*space);
    if (!a.valid) return fam;
    const Field& f = space->gluing().forward;
    const Field& finv = space->gluing().inverse;
    for (int r = 0; r < plan.random_sections; ++r) {
      Field sigma = random_covector(n2, rng);
      Field s1 = pull_back(*space, sigma, f);
      Field s2 = sigma;
      for (Eigen::Index k = 0; k < a.normals.rows(); ++k) {
        std::vector<double> nu(a.normals.cols());
        for (Eigen::Index i = 0; i < a.normals.cols(); ++i) nu[i] = a.normals(k, i);
        Field nu1 = Field::constant(n1, nu);
        s1 = add(s1, times(random_polynomial(n1, 2, rng), n1, nu1));
        if (n1 == n2) {
          Field nu2 = pull_back(*space, nu1, finv);
          s2 = add(s2, multiply(Field::from_expr(n2, random_polynomial(n2, 2, rng)), nu2));
        }
      }
      fam.sections.push_back(LambdaSection::assemble(space, s1, s2, plan));
      fam.labels.push_back("normal " + std::to_string(r));
    }
  }
  return fam;
}

FunctionFamily glued_functions(const SpacePtr& space, const SamplePlan& plan, int count) {
  const int n1 = space->n1(), n2 = space->n2();
  Rng rng(plan.seed ^ 0xf00dULL);
  Expr q1 = locus_multiplier(*space);
  const auto& loc = space->locus();
  auto a = affine_locus(*space);
  FunctionFamily fam;
  for (int r = 0; r < count; ++r) {
    Field h2 = Field::from_expr(n2, random_polynomial(n2, 2, rng));
    Field h1 = compose(h2, space->gluing().forward);
    Expr extra = q1 * random_polynomial(n1, 2, rng);
    if (loc.kind() == LocusKind::PointSet) {
      const auto& pts = loc.points();
      for (size_t k = 0; k < pts.size(); ++k) {
        Eigen::VectorXd ell(n1);
        for (int i = 0; i < n1; ++i) ell(i) = rng.uniform(-1.0, 1.0);
        Expr term = normal_coordinate(ell, pts[k]);
        for (size_t m = 0; m < pts.size(); ++m) {
          if (m != k) term = term * squared_distance(pts[m]);
        }
        extra = extra + term;
      }
    } else if (a.valid) {
      for (Eigen::Index k = 0; k < a.normals.rows(); ++k) {
        extra = extra + Expr(rng.uniform(-1.0, 1.0)) * normal_coordinate(a.normals.row(k), a.base);
      }
    }
    h1 = add(h1, Field::from_expr(n1, extra));
    fam.functions.push_back(GluedFunction::from_splits(space, h1, h2, plan));
    fam.labels.push_back("function " + std::to_string(r));
  }
  return fam;
}

}  // namespace dglue
