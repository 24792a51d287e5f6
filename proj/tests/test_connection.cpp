#include "doctest.h"

#include <cmath>

#include "dglue/connection.hpp"
#include "fixtures.hpp"

using namespace dglue;
using fixtures::X;

namespace {

BlockMetric constant_metric(int n, std::vector<double> entries) { return BlockMetric(Field::constant(n, entries)); }

BlockConnection christoffel_1d(const Expr& e) { return BlockConnection::from_exprs(1, {e}); }

// Only the symbol (k, i, j) is nonzero.
BlockConnection single_symbol_2d(int k, int i, int j, double value) {
  std::vector<Expr> s(8, Expr(0.0));
  s[k * 4 + i * 2 + j] = Expr(value);
  return BlockConnection::from_exprs(2, s);
}

Field covector(int n, std::vector<Expr> c) { return Field::from_exprs(n, std::move(c)); }

SpacePtr half_plane() {
  return build_glued_space(EuclideanBlock(2), EuclideanBlock(2), GluingLocus::open_subdomain({-X(0)}),
                           fixtures::identity_map(2));
}

}  // namespace

TEST_CASE("block connection action") {
  auto flat = BlockConnection::flat(1);
  CHECK(flat.apply_at(Field::from_expr(1, X(0)), {0.3})(0, 0) == doctest::Approx(1.0));
  auto one = christoffel_1d(Expr(1.0));
  CHECK(one.apply_at(Field::constant(1, {1.0}), {0.3})(0, 0) == doctest::Approx(-1.0));
  // covariant derivative along d/dx of x dx
  CHECK(covariant_derivative_block(flat, Field::constant(1, {1.0}), Field::from_expr(1, X(0)), {0.7})(0) ==
        doctest::Approx(1.0));
  CHECK(covariant_derivative_block(flat, Field::constant(1, {0.0}), Field::from_expr(1, X(0)), {0.7})(0) == 0.0);
}

TEST_CASE("Lie brackets on a line") {
  Field xd = Field::from_expr(1, X(0));
  Field d = Field::constant(1, {1.0});
  CHECK(lie_bracket_vectors(xd, d, {0.4})(0) == doctest::Approx(-1.0));
  CHECK(lie_bracket_vectors_classical(xd, d, {0.4})(0) == doctest::Approx(-1.0));
  CHECK(lie_bracket_vectors(d, Field::constant(1, {2.0}), {0.4})(0) == doctest::Approx(0.0));
  CHECK(lie_bracket_vectors(xd, xd, {0.4})(0) == doctest::Approx(0.0));
  // identity Gram: [x dx, dx] = -dx
  CHECK(lie_bracket_forms_block(constant_metric(1, {1.0}), xd, d, {-0.2})(0) == doctest::Approx(-1.0));
}

TEST_CASE("torsion on blocks") {
  SUBCASE("any connection on a line is torsion free") {
    auto c = christoffel_1d(sin(X(0)) + Expr(2.0));
    BlockMetric g(Field::from_expr(1, Expr(1.0) + pow(X(0), 2)));
    Field r = Field::from_expr(1, X(0)), s = Field::from_expr(1, Expr(1.0) + pow(X(0), 3));
    for (double x : {-0.8, 0.1, 1.3}) {
      CHECK(std::abs(torsion_block(c, g, r, s, {x})(0)) < 1e-12);
      CHECK(std::abs(torsion_dual_block(c, r, s, {x})(0)) < 1e-12);
    }
  }
  SUBCASE("an asymmetric symbol on the plane") {
    // first-upper, (first, second)-lower symbol equal to 1
    auto c = single_symbol_2d(0, 0, 1, 1.0);
    Field e1 = Field::constant(2, {1.0, 0.0}), e2 = Field::constant(2, {0.0, 1.0});
    Eigen::VectorXd t = torsion_dual_block(c, e1, e2, {0.3, -0.2});
    // antisymmetrized symbols: T^k = Gamma^k_12 - Gamma^k_21
    CHECK(t(0) == doctest::Approx(1.0));
    CHECK(t(1) == doctest::Approx(0.0));
    auto res = check_symmetric_block(c, constant_metric(2, {1, 0, 0, 1}), {e1, e2}, {{0.3, -0.2}});
    CHECK_FALSE(res.ok);
    // on forms with the identity Gram the same symbol is torsion free
    CHECK(max_abs(torsion_block(c, constant_metric(2, {1, 0, 0, 1}), e1, e2, {0.3, -0.2})) < 1e-14);
  }
  SUBCASE("flat connection, coordinate sections") {
    auto c = BlockConnection::flat(1);
    auto res = check_symmetric_block(c, constant_metric(1, {1.0}), {Field::constant(1, {1.0}), Field::from_expr(1, X(0))},
                                     {{-1.0}, {0.0}, {0.5}});
    CHECK(res.ok);
  }
}

TEST_CASE("block metric compatibility") {
  BlockMetric g(Field::from_expr(1, Expr(1.0) + pow(X(0), 2)));
  Field dx = Field::constant(1, {1.0});
  // d(1 + x^2) = 2x while the flat connection contributes nothing
  CHECK(metric_compat_residual_block(BlockConnection::flat(1), g, dx, dx, {0.5})(0) == doctest::Approx(1.0));
  CHECK_FALSE(check_metric_compatible_block(BlockConnection::flat(1), g, {dx}, {{0.5}}).ok);
  CHECK(check_metric_compatible_block(BlockConnection::flat(1), constant_metric(1, {1.0}), {dx, Field::from_expr(1, X(0))},
                                      {{0.5}})
            .ok);
  auto lc = koszul_solve(g);
  CHECK(check_metric_compatible_block(lc, g, {dx, Field::from_expr(1, X(0) * X(0))}, {{-1.0}, {0.0}, {0.5}}).ok);
}

TEST_CASE("Leibniz rule on a block") {
  auto c = christoffel_1d(X(0));
  Field h = Field::from_expr(1, Expr(1.0) + pow(X(0), 2));
  Field s = Field::from_expr(1, sin(X(0)));
  CHECK(max_abs(leibniz_residual_block(c, h, s, {0.6})) < 1e-13);
}

TEST_CASE("Koszul solver") {
  SUBCASE("constant Gram gives zero symbols") {
    auto c = koszul_solve(constant_metric(2, {2.0, 0.5, 0.5, 1.0}));
    CHECK(max_abs(to_vector(c.christoffel()(Point{0.2, 0.1}))) < 1e-14);
  }
  SUBCASE("dual Gram e^{2x}") {
    BlockMetric g(Field::from_expr(1, exp(Expr(-2.0) * X(0))));
    auto c = koszul_solve(g);
    auto oracle = christoffel_oracle(g);
    for (double x : {-1.0, 0.0, 0.7}) {
      CHECK(c.symbol({x}, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(c.symbol({x}, 0, 0, 0) - oracle.symbol({x}, 0, 0, 0)) < 1e-12);
    }
  }
  SUBCASE("dual Gram diag(1, 1 + x^2)") {
    Expr one(1.0), zero(0.0);
    BlockMetric g(Field::from_exprs(2, {one, zero, zero, one / (one + pow(X(0), 2))}));
    auto c = koszul_solve(g);
    auto fd = koszul_solve(g, DiffConfig{DiffMode::FiniteDifference, 1e-5});
    auto oracle = christoffel_oracle(g);
    for (Point x : {Point{0.5, 0.3}, Point{-1.2, 0.0}}) {
      double a = x[0];
      CHECK(c.symbol(x, 1, 0, 1) == doctest::Approx(a / (1 + a * a)).epsilon(1e-12));
      CHECK(c.symbol(x, 1, 1, 0) == doctest::Approx(a / (1 + a * a)).epsilon(1e-12));
      CHECK(c.symbol(x, 0, 1, 1) == doctest::Approx(-a).epsilon(1e-12));
      CHECK(std::abs(c.symbol(x, 0, 0, 0)) < 1e-14);
      CHECK(std::abs(c.symbol(x, 1, 1, 1)) < 1e-14);
      CHECK(max_abs(to_vector(c.christoffel()(x)) - to_vector(oracle.christoffel()(x))) < 1e-12);
      CHECK(max_abs(to_vector(fd.christoffel()(x)) - to_vector(oracle.christoffel()(x))) < 1e-6);
    }
  }
  SUBCASE("perturbations break symmetry or compatibility") {
    Expr one(1.0), zero(0.0);
    BlockMetric g(Field::from_exprs(2, {one + pow(X(1), 2), zero, zero, one + pow(X(0), 2)}));
    auto lc = koszul_solve(g);
    std::vector<Field> secs{Field::constant(2, {1.0, 0.0}), Field::constant(2, {0.0, 1.0}),
                            covector(2, {X(0), X(1) * X(1)})};
    std::vector<Point> pts{{0.3, -0.4}, {-0.7, 0.2}};
    CHECK(check_symmetric_block(lc, g, secs, pts).ok);
    CHECK(check_metric_compatible_block(lc, g, secs, pts).ok);
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> delta(8);
      for (double& v : delta) v = rng.uniform(-0.1, 0.1);
      auto p = lc.perturbed(delta);
      bool sym = check_symmetric_block(p, g, secs, pts).ok;
      bool compat = check_metric_compatible_block(p, g, secs, pts).ok;
      CHECK_FALSE((sym && compat));
    }
  }
}

TEST_CASE("tensor lifts") {
  auto s = fixtures::cross();
  auto fib = compute_fibre(*s, s->classify(BlockTag::First, {0.0}));
  Eigen::MatrixXd a1(1, 1), a2(1, 1);
  a1 << 1.0;
  a2 << 1.0;
  auto t = lift_tensor(fib, a1, a2);
  CHECK(t.matched);
  auto [p1, p2] = project_tensor(*fib, t.c);
  CHECK(p1(0, 0) == doctest::Approx(1.0));
  CHECK(p2(0, 0) == doctest::Approx(1.0));
  a2 << 3.0;
  auto u = lift_tensor(fib, a1, a2);
  CHECK_FALSE(u.matched);
  CHECK(u.residual < 1e-12);

  auto ray = fixtures::line_ray();
  auto fr = compute_fibre(*ray, ray->classify(BlockTag::First, {-1.0}));
  try {
    lift_tensor(fr, a1, a2);
    FAIL("expected IncompatiblePair");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IncompatiblePair);
  }
}

TEST_CASE("compatibility of connections") {
  SamplePlan plan;
  auto ray = fixtures::line_ray();
  auto fam = compatible_sections(ray, plan);
  CHECK(check_connections_compatible(*ray, BlockConnection::flat(1), BlockConnection::flat(1), fam, plan).ok);
  auto bad = check_connections_compatible(*ray, BlockConnection::flat(1), christoffel_1d(Expr(1.0)), fam, plan);
  CHECK_FALSE(bad.ok);
  REQUIRE_FALSE(bad.witnesses.empty());
  auto g = glue_metrics(ray, constant_metric(1, {1.0}), constant_metric(1, {1.0}));
  try {
    glue_connections(g, BlockConnection::flat(1), christoffel_1d(Expr(1.0)));
    FAIL("expected IncompatibleConnections");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IncompatibleConnections);
  }

  auto cross = fixtures::cross();
  auto cfam = compatible_sections(cross, plan);
  CHECK(check_connections_compatible(*cross, BlockConnection::flat(1), christoffel_1d(X(0) + Expr(3.0)), cfam, plan).ok);
}

TEST_CASE("glued action") {
  auto s = fixtures::cross();
  auto t = DualSection::from_splits(s, Field::constant(1, {1.0}), Field::constant(1, {1.0}));
  auto h = GluedFunction::from_splits(s, Field::from_expr(1, X(0)), Field::from_expr(1, X(0)));
  auto fib = compute_fibre(*s, s->classify(BlockTag::First, {0.0}));
  CHECK(action(t, h, fib) == doctest::Approx(1.0));
  CHECK(action_split(t, h, fib) == doctest::Approx(1.0));
  auto c = GluedFunction::from_splits(s, Field::constant(1, {2.0}), Field::constant(1, {2.0}));
  CHECK(action(t, c, fib) == doctest::Approx(0.0));

  auto ray = fixtures::line_ray();
  auto tr = DualSection::from_splits(ray, Field::constant(1, {1.0}), Field::constant(1, {1.0}));
  auto sq = GluedFunction::from_splits(ray, Field::from_expr(1, pow(X(0), 2)), Field::from_expr(1, pow(X(0), 2)));
  auto fr = compute_fibre(*ray, ray->classify(BlockTag::Second, {0.8}));
  CHECK(action(tr, sq, fr) == doctest::Approx(1.6));
}

TEST_CASE("glued connection on the cross") {
  auto s = fixtures::cross();
  auto g = glue_metrics(s, constant_metric(1, {1.0}), constant_metric(1, {1.0}));
  auto c = glue_connections(g, BlockConnection::flat(1), BlockConnection::flat(1));
  auto sec = LambdaSection::assemble(s, Field::from_expr(1, X(0)), Field::from_expr(1, X(0)));
  auto fib = compute_fibre(*s, s->classify(BlockTag::First, {0.0}));
  auto v = c.apply(sec, fib);
  auto [p1, p2] = project_tensor(*fib, v.c);
  CHECK(p1(0, 0) == doctest::Approx(1.0));
  CHECK(p2(0, 0) == doctest::Approx(1.0));

  auto t = DualSection::pairing(g, sec);
  auto direct = covariant_derivative(c, t, sec, fib);
  auto split = covariant_derivative_split(c, t, sec, fib);
  CHECK((direct.c - split.c).norm() < 1e-12);

  SamplePlan plan;
  auto fam = coherent_sections(s, plan);
  auto pts = s->samples(plan).all();
  CHECK(check_symmetric(c, fam, pts).ok);
  CHECK(check_metric_compatible(c, fam, pts).ok);
  CHECK(check_leibniz(c, glued_functions(s, plan), compatible_sections(s, plan), pts).ok);
}

TEST_CASE("splitting identities on the line-ray gluing") {
  auto ray = fixtures::line_ray();
  BlockMetric m(Field::from_expr(1, Expr(1.0) + pow(X(0), 2)));
  auto g = glue_metrics(ray, m, m);
  auto c = glue_connections(g, koszul_solve(m), koszul_solve(m));
  SamplePlan plan;
  auto fam = coherent_sections(ray, plan);
  auto pts = ray->samples(plan).all();
  for (const auto& p : {pts.front(), pts.back(), ray->locus_samples(plan).front()}) {
    auto fib = compute_fibre(*ray, p);
    const auto& r = fam.sections[1];
    const auto& s = fam.sections[2];
    auto b = lie_bracket_forms(g, r, s, fib);
    auto bs = lie_bracket_forms_split(g, r, s, fib);
    CHECK((b.c - bs.c).norm() < 1e-10);
    auto t = DualSection::pairing(g, r);
    CHECK((covariant_derivative(c, t, s, fib).c - covariant_derivative_split(c, t, s, fib).c).norm() < 1e-10);
    CHECK(block_components(torsion(c, r, s, fib)).norm() < 1e-10);
    CHECK((torsion(c, r, s, fib).c + torsion(c, s, r, fib).c).norm() < 1e-12);
  }
  CHECK(check_symmetric(c, fam, pts).ok);
  CHECK(check_metric_compatible(c, fam, pts).ok);
}

TEST_CASE("torsion splitting without the half weight") {
  auto plane = half_plane();
  auto id = constant_metric(2, {1, 0, 0, 1});
  auto g = glue_metrics(plane, id, id);
  // second-upper, (first, second)-lower symbol: nonzero torsion on forms
  auto conn = single_symbol_2d(0, 1, 0, 1.0);
  auto c = glue_connections(g, conn, conn);
  auto r = LambdaSection::assemble(plane, Field::constant(2, {1.0, 0.0}), Field::constant(2, {1.0, 0.0}));
  auto s = LambdaSection::assemble(plane, covector(2, {Expr(0.0), X(0)}), covector(2, {Expr(0.0), X(0)}));
  auto fib = compute_fibre(*plane, plane->classify(BlockTag::First, {-0.5, 0.25}));
  REQUIRE(fib->on_locus());
  Eigen::VectorXd direct = block_components(torsion(c, r, s, fib));
  Eigen::VectorXd unweighted = block_components(torsion_split(c, r, s, fib, false));
  Eigen::VectorXd weighted = block_components(torsion_split(c, r, s, fib, true));
  CHECK(direct.norm() > 0.1);
  CHECK((direct - unweighted).norm() < 1e-10);
  CHECK((direct - weighted).norm() > 0.05);
}
