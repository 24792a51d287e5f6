#include "doctest.h"

#include "dglue/numerics.hpp"

using namespace dglue;

namespace {
Expr x0() { return Expr::var(0); }
Expr x1() { return Expr::var(1); }
}  // namespace

TEST_CASE("dual derivative of a cubic") {
  Field f = Field::from_expr(1, pow(x0(), 3));
  auto g = gradient(f, {2.0});
  CHECK(g[0] == doctest::Approx(12.0).epsilon(1e-15));
  auto gf = gradient(f, {2.0}, DiffConfig{DiffMode::FiniteDifference, 1e-5});
  CHECK(std::abs(gf[0] - 12.0) < 1e-6);
}

TEST_CASE("gradient of x*y^2") {
  Field f = Field::from_expr(2, x0() * pow(x1(), 2));
  auto g = gradient(f, {1.0, 2.0});
  CHECK(g[0] == doctest::Approx(4.0));
  CHECK(g[1] == doctest::Approx(4.0));
}

TEST_CASE("nested duals give second derivatives") {
  // d2/dx dy of x^2 y^3 at (1.5, -0.5) is 6 x y^2 = 2.25
  Field f = Field::from_expr(2, pow(x0(), 2) * pow(x1(), 3));
  auto grad_field = Field::lift<1>(2, 2, f.max_level(), [f]<typename T>(std::span<const T> x) {
    return jacobian(f, x, DiffConfig{});
  });
  auto hess = jacobian_matrix(grad_field, {1.5, -0.5});
  CHECK(hess(0, 1) == doctest::Approx(2.25));
  CHECK(hess(1, 0) == doctest::Approx(2.25));
  CHECK(hess(0, 0) == doctest::Approx(2.0 * -0.125));
  CHECK(hess(1, 1) == doctest::Approx(6.0 * 2.25 * -0.5));
  auto hess_fd = jacobian_matrix(grad_field, {1.5, -0.5}, DiffConfig{DiffMode::FiniteDifference, 1e-5});
  CHECK(max_abs(hess - hess_fd) < 1e-6);
}

TEST_CASE("symbolic derivative agrees with dual evaluation") {
  Expr e = exp(x0() * x1()) / (Expr(1.0) + pow(x0(), 2)) + sin(x1()) * sqrt(Expr(2.0) + x0());
  Field f = Field::from_expr(2, e);
  std::vector<double> p{0.3, -1.2};
  auto g = gradient(f, p);
  CHECK(derivative(e, 0)(p) == doctest::Approx(g[0]).epsilon(1e-13));
  CHECK(derivative(e, 1)(p) == doctest::Approx(g[1]).epsilon(1e-13));
}

TEST_CASE("fd cross check accepts smooth fields and flags a kink") {
  Field smooth = Field::from_expr(2, exp(x0()) * x1() + pow(x1(), 4));
  auto ok = fd_cross_check(smooth, {0.2, 0.7});
  CHECK(ok.agree);
  CHECK(ok.discrepancy < 1e-6);

  Field kink = Field::from_expr(1, abs(x0() - Expr(0.25)) + pow(x0(), 2));
  auto bad = fd_cross_check(kink, {0.25});
  CHECK_FALSE(bad.agree);
  CHECK_THROWS_AS(require_modes_agree(kink, {0.25}), Error);
}

TEST_CASE("derived fields lose one level per derivative") {
  Field f = Field::from_expr(1, pow(x0(), 2));
  auto d1 = Field::lift<1>(1, 1, f.max_level(), [f]<typename T>(std::span<const T> x) {
    return jacobian(f, x, DiffConfig{});
  });
  CHECK(d1.max_level() == Field::kTopLevel - 1);
  auto d2 = Field::lift<1>(1, 1, d1.max_level(), [d1]<typename T>(std::span<const T> x) {
    return jacobian(d1, x, DiffConfig{});
  });
  CHECK(d2({3.0})[0] == doctest::Approx(2.0));
}

TEST_CASE("nullspace basis in reduced row echelon form") {
  // one relation a - b = 0 on R^2
  Eigen::MatrixXd r(1, 2);
  r << 1.0, -1.0;
  auto n = nullspace_rref(r, 2, 1e-8);
  REQUIRE(n.cols() == 1);
  CHECK(n(0, 0) == doctest::Approx(1.0));
  CHECK(n(1, 0) == doctest::Approx(1.0));

  // no relations: identity
  auto id = nullspace_rref(Eigen::MatrixXd(0, 2), 2, 1e-8);
  CHECK(max_abs(id - Eigen::MatrixXd::Identity(2, 2)) == 0.0);

  // relation a_x - b_x = 0 on R^4
  Eigen::MatrixXd r2(1, 4);
  r2 << 1.0, 0.0, -1.0, 0.0;
  auto n2 = nullspace_rref(r2, 4, 1e-8);
  Eigen::MatrixXd expected(4, 3);
  expected << 1, 0, 0,
              0, 1, 0,
              1, 0, 0,
              0, 0, 1;
  // columns: (1,0,1,0), (0,1,0,0), (0,0,0,1)
  CHECK(max_abs(n2 - expected) < 1e-12);
}

TEST_CASE("near-degenerate relations raise RankAmbiguous") {
  Eigen::MatrixXd r(2, 2);
  r << 1.0, 0.0, 0.0, 1e-8;
  CHECK_THROWS_AS(nullspace_rref(r, 2, 1e-8), Error);
}

TEST_CASE("dense solve on dual scalars") {
  std::vector<R1> a{R1::variable(2.0, 0), R1(1.0), R1(1.0), R1(3.0)};
  std::vector<R1> b{R1(1.0), R1(2.0)};
  auto x = solve_dense(a, b, 2);
  // x = (1/5, 3/5) at a00 = 2; d x0 / d a00 = -x0 * (A^-1)_{00} = -0.2 * 0.6
  CHECK(x[0].v == doctest::Approx(0.2));
  CHECK(x[1].v == doctest::Approx(0.6));
  CHECK(x[0].d[0] == doctest::Approx(-0.12));
}

TEST_CASE("rng is deterministic") {
  Rng a(7), b(7);
  for (int i = 0; i < 5; ++i) CHECK(a.uniform(-1, 1) == b.uniform(-1, 1));
}
