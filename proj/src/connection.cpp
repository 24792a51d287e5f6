#include "dglue/connection.hpp"

#include <sstream>
#include <stdexcept>

namespace dglue {

namespace {

double scale_of(const Eigen::MatrixXd& m) { return std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 0.0); }

Eigen::VectorXd stack(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd v(a.size() + b.size());
  v << a, b;
  return v;
}

Field component(const Field& u, int k) {
  if (u.exprs()) return Field::from_expr(u.in_dim(), (*u.exprs())[k]);
  return Field::lift<0>(u.in_dim(), 1, u.max_level(),
                        [u, k]<typename T>(std::span<const T> x) { return std::vector<T>{u(x)[k]}; });
}

Field unit_covector(int n, int k) {
  std::vector<double> v(n, 0.0);
  v[k] = 1.0;
  return Field::constant(n, v);
}

// s^T M t as a scalar field.
Field inner(const BlockMetric& g, const Field& s, const Field& t) {
  const int n = g.dim();
  const Field m = g.gram();
  return Field::lift<0>(n, 1, min_level({&m, &s, &t}), [m, s, t, n]<typename T>(std::span<const T> x) {
    auto mv = m(x);
    auto sv = s(x);
    auto tv = t(x);
    T acc(0.0);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) acc = acc + sv[a] * mv[a * n + b] * tv[b];
    }
    return std::vector<T>{acc};
  });
}

template <typename T>
std::vector<T> nabla_at(const Field& gamma, int n, const Field& s, std::span<const T> x, const DiffConfig& cfg) {
  auto ds = jacobian(s, x, cfg);
  auto sv = s(x);
  auto g = gamma(x);
  std::vector<T> out(static_cast<size_t>(n) * n, T(0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      T v = ds[j * n + i];
      for (int k = 0; k < n; ++k) v = v - g[k * n * n + i * n + j] * sv[k];
      out[i * n + j] = v;
    }
  }
  return out;
}

double match_tolerance(const DiffConfig& cfg) { return cfg.mode == DiffMode::ForwardDual ? 1e-9 : 1e-5; }

double calculus_tolerance(const GluedSpace& space, const DiffConfig& cfg) {
  return space.tolerances().calculus(cfg.mode);
}

const Field& block_field(const FibreModel& fibre, const Field& f1, const Field& f2) {
  return fibre.kind == FibreKind::Block2Fibre ? f2 : f1;
}

}  // namespace

BlockConnection::BlockConnection(Field christoffel) : gamma_(std::move(christoffel)) {
  n_ = gamma_.in_dim();
  if (gamma_.out_dim() != n_ * n_ * n_) {
    throw Error(ErrorCode::DimensionMismatch, "Christoffel field must have n^3 components");
  }
}

BlockConnection BlockConnection::flat(int n) {
  return BlockConnection(Field::constant(n, std::vector<double>(static_cast<size_t>(n) * n * n, 0.0)));
}

BlockConnection BlockConnection::from_exprs(int n, std::vector<Expr> symbols) {
  return BlockConnection(Field::from_exprs(n, std::move(symbols)));
}

double BlockConnection::symbol(const Point& x, int k, int i, int j) const {
  return gamma_(x)[k * n_ * n_ + i * n_ + j];
}

Field BlockConnection::apply(const Field& s, const DiffConfig& cfg) const {
  if (s.in_dim() != n_ || s.out_dim() != n_) throw Error(ErrorCode::DimensionMismatch, "section shape mismatch");
  const Field gamma = gamma_;
  const int n = n_;
  return Field::lift<1>(n, n * n, std::min(s.max_level(), gamma.max_level() + 1),
                        [gamma, n, s, cfg]<typename T>(std::span<const T> x) { return nabla_at(gamma, n, s, x, cfg); });
}

Eigen::MatrixXd BlockConnection::apply_at(const Field& s, const Point& x, const DiffConfig& cfg) const {
  if (s.in_dim() != n_ || s.out_dim() != n_) throw Error(ErrorCode::DimensionMismatch, "section shape mismatch");
  return to_matrix(nabla_at(gamma_, n_, s, std::span<const double>(x), cfg), n_, n_);
}

BlockConnection BlockConnection::perturbed(const std::vector<double>& delta) const {
  return BlockConnection(add(gamma_, Field::constant(n_, delta)));
}

Field vector_field(const BlockMetric& g, const Field& r) { return mat_vec(g.gram(), r); }

double action_block(const Field& t, const Field& h, const Point& x, const DiffConfig& cfg) {
  auto tv = t(x);
  auto gh = gradient(h, x, cfg);
  double acc = 0.0;
  for (size_t i = 0; i < tv.size(); ++i) acc += tv[i] * gh[i];
  return acc;
}

Field action_field(const Field& t, const Field& h, const DiffConfig& cfg) {
  if (t.in_dim() != h.in_dim() || t.out_dim() != t.in_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "action expects a vector field and a function on the same block");
  }
  return Field::lift<1>(h.in_dim(), 1, std::min(t.max_level() + 1, h.max_level()),
                        [t, h, cfg]<typename T>(std::span<const T> x) {
                          auto tv = t(x);
                          auto gh = gradient(h, x, cfg);
                          T acc(0.0);
                          for (size_t i = 0; i < tv.size(); ++i) acc = acc + tv[i] * gh[i];
                          return std::vector<T>{acc};
                        });
}

Eigen::VectorXd lie_bracket_vectors(const Field& t1, const Field& t2, const Point& x, const DiffConfig& cfg) {
  const int n = t1.in_dim();
  Eigen::VectorXd out(n);
  for (int k = 0; k < n; ++k) {
    Field xk = Field::from_expr(n, Expr::var(k));
    out(k) = action_block(t1, action_field(t2, xk, cfg), x, cfg) - action_block(t2, action_field(t1, xk, cfg), x, cfg);
  }
  return out;
}

Eigen::VectorXd lie_bracket_vectors_classical(const Field& t1, const Field& t2, const Point& x,
                                              const DiffConfig& cfg) {
  Eigen::MatrixXd j1 = jacobian_matrix(t1, x, cfg);
  Eigen::MatrixXd j2 = jacobian_matrix(t2, x, cfg);
  return j2 * to_vector(t1(x)) - j1 * to_vector(t2(x));
}

Eigen::VectorXd lie_bracket_forms_block(const BlockMetric& g, const Field& r, const Field& s, const Point& x,
                                        const DiffConfig& cfg) {
  Eigen::VectorXd theta = lie_bracket_vectors_classical(vector_field(g, r), vector_field(g, s), x, cfg);
  return pairing_invert(g.at(x), theta);
}

Eigen::VectorXd covariant_derivative_block(const BlockConnection& c, const Field& t, const Field& s, const Point& x,
                                           const DiffConfig& cfg) {
  return c.apply_at(s, x, cfg).transpose() * to_vector(t(x));
}

Eigen::VectorXd covariant_derivative_vectors(const BlockConnection& c, const Field& t, const Field& u,
                                             const Point& x, const DiffConfig& cfg) {
  const int n = c.dim();
  Eigen::VectorXd out(n);
  Eigen::VectorXd uv = to_vector(u(x));
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd nabla_ek = covariant_derivative_block(c, t, unit_covector(n, k), x, cfg);
    out(k) = action_block(t, component(u, k), x, cfg) - nabla_ek.dot(uv);
  }
  return out;
}

Eigen::VectorXd torsion_dual_block(const BlockConnection& c, const Field& t1, const Field& t2, const Point& x,
                                   const DiffConfig& cfg) {
  return covariant_derivative_vectors(c, t1, t2, x, cfg) - covariant_derivative_vectors(c, t2, t1, x, cfg) -
         lie_bracket_vectors(t1, t2, x, cfg);
}

Eigen::VectorXd torsion_block(const BlockConnection& c, const BlockMetric& g, const Field& r, const Field& s,
                              const Point& x, const DiffConfig& cfg) {
  return covariant_derivative_block(c, vector_field(g, r), s, x, cfg) -
         covariant_derivative_block(c, vector_field(g, s), r, x, cfg) - lie_bracket_forms_block(g, r, s, x, cfg);
}

Eigen::VectorXd metric_compat_residual_block(const BlockConnection& c, const BlockMetric& g, const Field& s,
                                             const Field& t, const Point& x, const DiffConfig& cfg) {
  Eigen::VectorXd lhs = to_vector(gradient(inner(g, s, t), x, cfg));
  Eigen::MatrixXd m = g.at(x);
  Eigen::VectorXd rhs = c.apply_at(s, x, cfg) * m * to_vector(t(x)) + c.apply_at(t, x, cfg) * m * to_vector(s(x));
  return lhs - rhs;
}

Eigen::MatrixXd leibniz_residual_block(const BlockConnection& c, const Field& h, const Field& s, const Point& x,
                                       const DiffConfig& cfg) {
  Eigen::MatrixXd hs = c.apply_at(multiply(h, s), x, cfg);
  Eigen::VectorXd dh = to_vector(gradient(h, x, cfg));
  return hs - dh * to_vector(s(x)).transpose() - h(x)[0] * c.apply_at(s, x, cfg);
}

CheckResult check_symmetric_block(const BlockConnection& c, const BlockMetric& g, const std::vector<Field>& sections,
                                  const std::vector<Point>& points, const DiffConfig& cfg, const Tolerances& tol) {
  CheckResult res;
  const double eps = tol.calculus(cfg.mode);
  for (const auto& x : points) {
    for (size_t a = 0; a < sections.size(); ++a) {
      for (size_t b = a + 1; b < sections.size(); ++b) {
        Eigen::VectorXd tf = torsion_block(c, g, sections[a], sections[b], x, cfg);
        Eigen::VectorXd tv = torsion_dual_block(c, sections[a], sections[b], x, cfg);
        std::ostringstream d;
        d << "sections " << a << "," << b << ": torsion on forms " << max_abs(tf) << ", on vectors " << max_abs(tv);
        double scale = std::max(scale_of(to_vector(sections[a](x))), scale_of(to_vector(sections[b](x))));
        res.record(std::max(max_abs(tf), max_abs(tv)), eps * scale * scale_of(g.at(x)), format_point(x), d.str());
      }
    }
  }
  return res;
}

CheckResult check_metric_compatible_block(const BlockConnection& c, const BlockMetric& g,
                                          const std::vector<Field>& sections, const std::vector<Point>& points,
                                          const DiffConfig& cfg, const Tolerances& tol) {
  CheckResult res;
  const double eps = tol.calculus(cfg.mode);
  for (const auto& x : points) {
    for (size_t a = 0; a < sections.size(); ++a) {
      for (size_t b = a; b < sections.size(); ++b) {
        Eigen::VectorXd r = metric_compat_residual_block(c, g, sections[a], sections[b], x, cfg);
        std::ostringstream d;
        d << "sections " << a << "," << b << ": d g(s,t) differs from g(nabla s,t) + g(s,nabla t) by " << max_abs(r);
        double scale = std::max(scale_of(to_vector(sections[a](x))), scale_of(to_vector(sections[b](x))));
        res.record(max_abs(r), eps * scale * scale * scale_of(g.at(x)), format_point(x), d.str());
      }
    }
  }
  return res;
}

BlockConnection koszul_solve(const BlockMetric& g, const DiffConfig& cfg) {
  const int n = g.dim();
  {
    Point origin(n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        auto b = lie_bracket_vectors(unit_covector(n, i), unit_covector(n, j), origin, cfg);
        if (max_abs(b) > Tolerances{}.numeric) throw std::logic_error("coordinate frame brackets do not vanish");
      }
    }
  }
  Field dual = g.dual_gram();
  auto eval = [dual, n, cfg]<typename T>(std::span<const T> x) {
    auto gm = dual(x);
    auto dg = jacobian(dual, x, cfg);
    // frame e_i acting on G(e_j, e_l)
    auto act = [&](int i, int j, int l) { return dg[(j * n + l) * n + i]; };
    const int nn = n * n;
    std::vector<T> rhs(static_cast<size_t>(n) * nn, T(0.0));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
          // the three bracket terms vanish for the coordinate frame
          rhs[l * nn + i * n + j] = (act(i, j, l) + act(j, i, l) - act(l, i, j)) * 0.5;
        }
      }
    }
    return solve_dense(gm, rhs, n, nn);
  };
  return BlockConnection(Field::lift<1>(n, n * n * n, dual.max_level(), eval));
}

BlockConnection christoffel_oracle(const BlockMetric& g) {
  const int n = g.dim();
  Field dual = g.dual_gram();
  auto eval = [dual, n]<typename T>(std::span<const T> x) {
    DiffConfig exact;
    auto gm = dual(x);
    auto inv = inverse_dense(gm, n);
    auto dg = jacobian(dual, x, exact);
    auto d = [&](int i, int j, int l) { return dg[(j * n + l) * n + i]; };
    std::vector<T> out(static_cast<size_t>(n) * n * n, T(0.0));
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          T acc(0.0);
          for (int l = 0; l < n; ++l) acc = acc + inv[k * n + l] * (d(i, j, l) + d(j, i, l) - d(l, i, j));
          out[k * n * n + i * n + j] = acc * 0.5;
        }
      }
    }
    return out;
  };
  return BlockConnection(Field::lift<1>(n, n * n * n, dual.max_level(), eval));
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> project_tensor(const FibreModel& fibre, const Eigen::MatrixXd& c) {
  switch (fibre.kind) {
    case FibreKind::Block1Fibre:
      return {c, Eigen::MatrixXd()};
    case FibreKind::Block2Fibre:
      return {Eigen::MatrixXd(), c};
    case FibreKind::CompatiblePairs:
      break;
  }
  Eigen::MatrixXd b1 = fibre.rho1(), b2 = fibre.rho2();
  return {b1 * c * b1.transpose(), b2 * c * b2.transpose()};
}

TensorValue lift_tensor(const FibrePtr& fibre, const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2, double tol) {
  TensorValue t;
  t.fibre = fibre;
  if (fibre->kind == FibreKind::Block1Fibre) {
    t.c = a1;
    return t;
  }
  if (fibre->kind == FibreKind::Block2Fibre) {
    t.c = a2;
    return t;
  }
  const double scale = std::max(scale_of(a1), scale_of(a2));
  const Eigen::MatrixXd& j = fibre->jacobian;
  auto residual_of = [&](const Eigen::MatrixXd& c) {
    auto [p1, p2] = project_tensor(*fibre, c);
    return std::max(max_abs(p1 - a1), max_abs(p2 - a2));
  };
  if (fibre->matched.cols() > 0 && max_abs(a1 - j.transpose() * a2 * j) <= tol * scale) {
    const Eigen::MatrixXd& p = fibre->matched;
    t.c = p * a2 * p.transpose();
    t.matched = true;
    t.residual = residual_of(t.c);
    if (t.residual <= tol * scale) return t;
  }
  const Eigen::MatrixXd b1 = fibre->rho1(), b2 = fibre->rho2();
  const int d = fibre->dim();
  const int n1 = static_cast<int>(b1.rows()), n2 = static_cast<int>(b2.rows());
  // vec(B C B^T) = (B kron B) vec(C), column-major vec
  Eigen::MatrixXd k(n1 * n1 + n2 * n2, d * d);
  Eigen::VectorXd rhs(n1 * n1 + n2 * n2);
  auto fill = [&](const Eigen::MatrixXd& b, const Eigen::MatrixXd& a, int offset) {
    const int n = static_cast<int>(b.rows());
    for (int bb = 0; bb < n; ++bb) {
      for (int aa = 0; aa < n; ++aa) {
        rhs(offset + aa + n * bb) = a(aa, bb);
        for (int q = 0; q < d; ++q) {
          for (int p = 0; p < d; ++p) k(offset + aa + n * bb, p + d * q) = b(aa, p) * b(bb, q);
        }
      }
    }
  };
  fill(b1, a1, 0);
  fill(b2, a2, n1 * n1);
  Eigen::VectorXd sol = k.completeOrthogonalDecomposition().solve(rhs);
  t.c = Eigen::Map<Eigen::MatrixXd>(sol.data(), d, d);
  t.matched = false;
  t.residual = residual_of(t.c);
  if (t.residual > tol * scale) {
    std::ostringstream os;
    os << "tensor pair at " << format_point(fibre->point) << " is outside the range of the fibre tensor square"
       << " (residual " << t.residual << ")";
    throw Error(ErrorCode::IncompatiblePair, os.str());
  }
  return t;
}

CheckResult check_connections_compatible(const GluedSpace& space, const BlockConnection& c1,
                                         const BlockConnection& c2, const SectionFamily& family,
                                         const SamplePlan& plan, const DiffConfig& cfg) {
  if (c1.dim() != space.n1() || c2.dim() != space.n2()) {
    throw Error(ErrorCode::DimensionMismatch, "connection dimensions do not match the blocks");
  }
  if (!space.hypotheses().pullback_equality || !space.hypotheses().omega_equality) {
    throw Error(ErrorCode::HypothesisNotAsserted, "gluing hypotheses are not asserted");
  }
  CheckResult res;
  const double eps = std::max(space.tolerances().numeric, calculus_tolerance(space, cfg));
  for (const auto& gp : space.locus_samples(plan)) {
    auto fib = compute_fibre(space, gp, cfg);
    Eigen::MatrixXd v = space.locus_tangent(gp, cfg);
    Eigen::MatrixXd jv = fib->jacobian * v;
    for (size_t a = 0; a < family.sections.size(); ++a) {
      const auto& s = family.sections[a];
      Eigen::MatrixXd a1 = c1.apply_at(s.s1(), gp.coords, cfg);
      Eigen::MatrixXd a2 = c2.apply_at(s.s2(), fib->image, cfg);
      Eigen::MatrixXd r1 = v.transpose() * a1 * v;
      Eigen::MatrixXd r2 = jv.transpose() * a2 * jv;
      std::ostringstream d;
      d << family.labels[a] << ": pulled-back tensors differ by " << (r1.size() ? max_abs(r1 - r2) : 0.0);
      res.record(r1.size() ? max_abs(r1 - r2) : 0.0, eps * std::max(scale_of(a1), scale_of(a2)), format_point(gp),
                 d.str());
    }
  }
  return res;
}

GluedConnection::GluedConnection(GluedMetric g, BlockConnection c1, BlockConnection c2, DiffConfig cfg)
    : g_(std::move(g)), c1_(std::move(c1)), c2_(std::move(c2)), cfg_(cfg) {
  if (c1_.dim() != g_.space()->n1() || c2_.dim() != g_.space()->n2()) {
    throw Error(ErrorCode::DimensionMismatch, "connection dimensions do not match the blocks");
  }
}

TensorValue GluedConnection::apply(const LambdaSection& s, const FibrePtr& fibre) const {
  switch (fibre->kind) {
    case FibreKind::Block1Fibre:
      return lift_tensor(fibre, c1_.apply_at(s.s1(), fibre->point.coords, cfg_), Eigen::MatrixXd());
    case FibreKind::Block2Fibre:
      return lift_tensor(fibre, Eigen::MatrixXd(), c2_.apply_at(s.s2(), fibre->point.coords, cfg_));
    case FibreKind::CompatiblePairs:
      break;
  }
  Eigen::MatrixXd a1 = c1_.apply_at(s.s1(), fibre->point.coords, cfg_);
  Eigen::MatrixXd a2 = c2_.apply_at(s.s2(), fibre->image, cfg_);
  return lift_tensor(fibre, a1, a2, match_tolerance(cfg_));
}

GluedConnection glue_connections(const GluedMetric& g, BlockConnection c1, BlockConnection c2,
                                 const SamplePlan& plan, const DiffConfig& cfg) {
  const auto& space = g.space();
  auto family = compatible_sections(space, plan);
  auto res = check_connections_compatible(*space, c1, c2, family, plan, cfg);
  if (!res.ok) {
    const auto& w = res.witnesses.front();
    throw Error(ErrorCode::IncompatibleConnections, "at " + w.location + ", " + w.detail);
  }
  return GluedConnection(g, std::move(c1), std::move(c2), cfg);
}

DualSection DualSection::from_splits(SpacePtr space, Field t1, Field t2) {
  if (t1.in_dim() != space->n1() || t1.out_dim() != space->n1() || t2.in_dim() != space->n2() ||
      t2.out_dim() != space->n2()) {
    throw Error(ErrorCode::DimensionMismatch, "dual section components must be vector fields on their blocks");
  }
  DualSection d;
  d.space_ = std::move(space);
  d.t1_ = std::move(t1);
  d.t2_ = std::move(t2);
  return d;
}

DualSection DualSection::pairing(const GluedMetric& g, const LambdaSection& r) {
  DualSection d = from_splits(g.space(), vector_field(g.g1(), r.s1()), vector_field(g.g2(), r.s2()));
  d.g_ = g;
  d.form_ = r;
  return d;
}

Eigen::VectorXd DualSection::eval(const FibrePtr& fibre) const {
  switch (fibre->kind) {
    case FibreKind::Block1Fibre:
      return to_vector(t1_(fibre->point.coords));
    case FibreKind::Block2Fibre:
      return to_vector(t2_(fibre->point.coords));
    case FibreKind::CompatiblePairs:
      break;
  }
  if (g_) return g_->gram(*fibre) * form_->eval(fibre).c;
  return 0.5 * (fibre->rho1().transpose() * to_vector(t1_(fibre->point.coords)) +
                fibre->rho2().transpose() * to_vector(t2_(fibre->image)));
}

double action(const DualSection& t, const GluedFunction& h, const FibrePtr& fibre, const DiffConfig& cfg) {
  return t.eval(fibre).dot(differential_glued(h, cfg).eval(fibre).c);
}

GluedFunction action_function(const DualSection& t, const GluedFunction& h, const DiffConfig& cfg) {
  return GluedFunction::averaged(h.space(), action_field(t.t1(), h.h1(), cfg), action_field(t.t2(), h.h2(), cfg));
}

double action_split(const DualSection& t, const GluedFunction& h, const FibrePtr& fibre, const DiffConfig& cfg) {
  switch (fibre->kind) {
    case FibreKind::Block1Fibre:
      return action_block(t.t1(), h.h1(), fibre->point.coords, cfg);
    case FibreKind::Block2Fibre:
      return action_block(t.t2(), h.h2(), fibre->point.coords, cfg);
    case FibreKind::CompatiblePairs:
      break;
  }
  return 0.5 * action_block(t.t1(), h.h1(), fibre->point.coords, cfg) +
         0.5 * action_block(t.t2(), h.h2(), fibre->image, cfg);
}

DualElement lie_bracket_dual(const DualSection& a, const DualSection& b, const FibrePtr& fibre,
                             const DiffConfig& cfg) {
  if (!fibre->on_locus()) {
    const Field& ta = block_field(*fibre, a.t1(), a.t2());
    const Field& tb = block_field(*fibre, b.t1(), b.t2());
    return DualElement{fibre, lie_bracket_vectors(ta, tb, fibre->point.coords, cfg)};
  }
  const auto& space = a.space();
  const int n1 = space->n1(), n2 = space->n2();
  const Point& y = fibre->point.coords;
  const Point& fy = fibre->image;
  const Eigen::MatrixXd b1 = fibre->rho1(), b2 = fibre->rho2();
  const int d = fibre->dim();
  Eigen::VectorXd theta(d);
  for (int k = 0; k < d; ++k) {
    // h with dh(x) the k-th basis element
    Eigen::VectorXd u1 = b1.col(k), u2 = b2.col(k);
    Eigen::VectorXd w = u1 - fibre->jacobian.transpose() * u2;
    Expr e2(0.0), e1(0.0);
    for (int i = 0; i < n2; ++i) e2 = e2 + Expr(u2(i)) * (Expr::var(i) - Expr(fy[i]));
    for (int i = 0; i < n1; ++i) e1 = e1 + Expr(w(i)) * (Expr::var(i) - Expr(y[i]));
    Field h2 = Field::from_expr(n2, e2);
    Field h1 = add(compose(h2, space->gluing().forward), Field::from_expr(n1, e1));
    auto h = GluedFunction::unchecked(space, h1, h2);
    theta(k) = action(a, action_function(b, h, cfg), fibre, cfg) - action(b, action_function(a, h, cfg), fibre, cfg);
  }
  return DualElement{fibre, theta};
}

FibreElement lie_bracket_forms(const GluedMetric& g, const LambdaSection& r, const LambdaSection& s,
                               const FibrePtr& fibre, const DiffConfig& cfg) {
  auto theta = lie_bracket_dual(DualSection::pairing(g, r), DualSection::pairing(g, s), fibre, cfg);
  return pairing_invert(g, theta);
}

FibreElement lie_bracket_forms_split(const GluedMetric& g, const LambdaSection& r, const LambdaSection& s,
                                     const FibrePtr& fibre, const DiffConfig& cfg) {
  switch (fibre->kind) {
    case FibreKind::Block1Fibre:
      return FibreElement{fibre, lie_bracket_forms_block(g.g1(), r.s1(), s.s1(), fibre->point.coords, cfg)};
    case FibreKind::Block2Fibre:
      return FibreElement{fibre, lie_bracket_forms_block(g.g2(), r.s2(), s.s2(), fibre->point.coords, cfg)};
    case FibreKind::CompatiblePairs:
      break;
  }
  return rho_pair_inverse(fibre, lie_bracket_forms_block(g.g1(), r.s1(), s.s1(), fibre->point.coords, cfg),
                          lie_bracket_forms_block(g.g2(), r.s2(), s.s2(), fibre->image, cfg));
}

FibreElement covariant_derivative(const GluedConnection& c, const DualSection& t, const LambdaSection& s,
                                  const FibrePtr& fibre) {
  TensorValue v = c.apply(s, fibre);
  return FibreElement{fibre, v.c.transpose() * t.eval(fibre)};
}

FibreElement covariant_derivative_split(const GluedConnection& c, const DualSection& t, const LambdaSection& s,
                                        const FibrePtr& fibre) {
  const auto& cfg = c.config();
  switch (fibre->kind) {
    case FibreKind::Block1Fibre:
      return FibreElement{fibre, covariant_derivative_block(c.c1(), t.t1(), s.s1(), fibre->point.coords, cfg)};
    case FibreKind::Block2Fibre:
      return FibreElement{fibre, covariant_derivative_block(c.c2(), t.t2(), s.s2(), fibre->point.coords, cfg)};
    case FibreKind::CompatiblePairs:
      break;
  }
  return rho_pair_inverse(fibre, covariant_derivative_block(c.c1(), t.t1(), s.s1(), fibre->point.coords, cfg),
                          covariant_derivative_block(c.c2(), t.t2(), s.s2(), fibre->image, cfg));
}

FibreElement torsion(const GluedConnection& c, const LambdaSection& r, const LambdaSection& s,
                     const FibrePtr& fibre) {
  const auto& g = c.metric();
  auto a = covariant_derivative(c, DualSection::pairing(g, r), s, fibre);
  auto b = covariant_derivative(c, DualSection::pairing(g, s), r, fibre);
  auto br = lie_bracket_forms(g, r, s, fibre, c.config());
  return FibreElement{fibre, a.c - b.c - br.c};
}

FibreElement torsion_split(const GluedConnection& c, const LambdaSection& r, const LambdaSection& s,
                           const FibrePtr& fibre, bool weighted) {
  const auto& g = c.metric();
  const auto& cfg = c.config();
  switch (fibre->kind) {
    case FibreKind::Block1Fibre:
      return FibreElement{fibre, torsion_block(c.c1(), g.g1(), r.s1(), s.s1(), fibre->point.coords, cfg)};
    case FibreKind::Block2Fibre:
      return FibreElement{fibre, torsion_block(c.c2(), g.g2(), r.s2(), s.s2(), fibre->point.coords, cfg)};
    case FibreKind::CompatiblePairs:
      break;
  }
  auto e = rho_pair_inverse(fibre, torsion_block(c.c1(), g.g1(), r.s1(), s.s1(), fibre->point.coords, cfg),
                            torsion_block(c.c2(), g.g2(), r.s2(), s.s2(), fibre->image, cfg));
  if (weighted) e.c *= 0.5;
  return e;
}

Eigen::VectorXd block_components(const FibreElement& e) {
  if (!e.fibre->on_locus()) return e.c;
  return stack(rho1(e), rho2(e));
}

Eigen::VectorXd metric_compat_residual(const GluedConnection& c, const LambdaSection& s, const LambdaSection& t,
                                       const FibrePtr& fibre) {
  const auto& g = c.metric();
  auto k = GluedFunction::averaged(s.space(), inner(g.g1(), s.s1(), t.s1()), inner(g.g2(), s.s2(), t.s2()));
  Eigen::VectorXd lhs = differential_glued(k, c.config()).eval(fibre).c;
  Eigen::MatrixXd gram = g.gram(*fibre);
  Eigen::VectorXd cs = s.eval(fibre).c, ct = t.eval(fibre).c;
  Eigen::VectorXd rhs = c.apply(s, fibre).c * gram * ct + c.apply(t, fibre).c * gram * cs;
  return block_components(FibreElement{fibre, lhs - rhs});
}

double leibniz_residual(const GluedConnection& c, const GluedFunction& h, const LambdaSection& s,
                        const FibrePtr& fibre) {
  Eigen::MatrixXd hs = c.apply(multiply(h, s), fibre).c;
  Eigen::VectorXd dh = differential_glued(h, c.config()).eval(fibre).c;
  Eigen::VectorXd sv = s.eval(fibre).c;
  Eigen::MatrixXd r = hs - dh * sv.transpose() - h.value(fibre->point) * c.apply(s, fibre).c;
  auto [p1, p2] = project_tensor(*fibre, r);
  return std::max(p1.size() ? max_abs(p1) : 0.0, p2.size() ? max_abs(p2) : 0.0);
}

CheckResult check_symmetric(const GluedConnection& c, const SectionFamily& family,
                            const std::vector<GluedPoint>& points) {
  CheckResult res;
  const double eps = calculus_tolerance(*c.space(), c.config());
  const auto& secs = family.sections;
  for (const auto& p : points) {
    auto fib = compute_fibre(*c.space(), p, c.config());
    for (size_t a = 0; a < secs.size(); ++a) {
      for (size_t b = a + 1; b < secs.size(); ++b) {
        Eigen::VectorXd v = block_components(torsion(c, secs[a], secs[b], fib));
        double scale = std::max(scale_of(block_components(secs[a].eval(fib))),
                                scale_of(block_components(secs[b].eval(fib))));
        std::ostringstream d;
        d << "torsion of (" << family.labels[a] << ", " << family.labels[b] << ") has size " << max_abs(v);
        res.record(max_abs(v), eps * scale * scale, format_point(p), d.str());
      }
    }
  }
  return res;
}

CheckResult check_metric_compatible(const GluedConnection& c, const SectionFamily& family,
                                    const std::vector<GluedPoint>& points) {
  CheckResult res;
  const double eps = calculus_tolerance(*c.space(), c.config());
  const auto& secs = family.sections;
  for (const auto& p : points) {
    auto fib = compute_fibre(*c.space(), p, c.config());
    double gscale = scale_of(c.metric().gram(*fib));
    for (size_t a = 0; a < secs.size(); ++a) {
      for (size_t b = a; b < secs.size(); ++b) {
        Eigen::VectorXd v = metric_compat_residual(c, secs[a], secs[b], fib);
        double scale = std::max(scale_of(block_components(secs[a].eval(fib))),
                                scale_of(block_components(secs[b].eval(fib))));
        std::ostringstream d;
        d << "(" << family.labels[a] << ", " << family.labels[b]
          << "): d g(s,t) - g(nabla s,t) - g(s,nabla t) has size " << max_abs(v);
        res.record(max_abs(v), eps * scale * scale * gscale, format_point(p), d.str());
      }
    }
  }
  return res;
}

CheckResult check_leibniz(const GluedConnection& c, const FunctionFamily& functions, const SectionFamily& family,
                          const std::vector<GluedPoint>& points) {
  CheckResult res;
  const double eps = calculus_tolerance(*c.space(), c.config());
  for (const auto& p : points) {
    auto fib = compute_fibre(*c.space(), p, c.config());
    for (size_t a = 0; a < functions.functions.size(); ++a) {
      for (size_t b = 0; b < family.sections.size(); ++b) {
        double r = leibniz_residual(c, functions.functions[a], family.sections[b], fib);
        double scale = std::max({1.0, std::abs(functions.functions[a].value(p)),
                                 scale_of(block_components(family.sections[b].eval(fib)))});
        std::ostringstream d;
        d << "(" << functions.labels[a] << ", " << family.labels[b] << "): Leibniz defect " << r;
        res.record(r, eps * scale * scale, format_point(p), d.str());
      }
    }
  }
  return res;
}

}  // namespace dglue
