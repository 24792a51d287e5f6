#pragma once

#include "dglue/space.hpp"

namespace fixtures {

using namespace dglue;

inline Expr X(int i) { return Expr::var(i); }

inline GluingMap identity_map(int n) {
  std::vector<Expr> id;
  for (int i = 0; i < n; ++i) id.push_back(X(i));
  return {Field::from_exprs(n, id), Field::from_exprs(n, id)};
}

// Two real lines glued at the origin.
inline SpacePtr cross() {
  return build_glued_space(EuclideanBlock(1), EuclideanBlock(1), GluingLocus::point_set({{0.0}}), identity_map(1));
}

// Two real lines glued along the negative half-line.
inline SpacePtr line_ray() {
  return build_glued_space(EuclideanBlock(1), EuclideanBlock(1), GluingLocus::open_subdomain({-X(0)}), identity_map(1));
}

// Two planes glued along the x axis.
inline SpacePtr plane_axis() {
  auto phi = Field::from_exprs(1, {X(0), Expr(0.0)});
  return build_glued_space(EuclideanBlock(2), EuclideanBlock(2), GluingLocus::submanifold(phi, {{-1.0, 1.0}}),
                           identity_map(2));
}

// Half-line glued through the affine map y = 2x + 1.
inline SpacePtr affine_ray() {
  GluingMap f{Field::from_expr(1, Expr(2.0) * X(0) + Expr(1.0)), Field::from_expr(1, (X(0) - Expr(1.0)) / Expr(2.0))};
  return build_glued_space(EuclideanBlock(1), EuclideanBlock(1), GluingLocus::open_subdomain({-X(0)}), f);
}

}  // namespace fixtures
