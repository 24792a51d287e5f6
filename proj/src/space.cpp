#include "dglue/space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dglue {

namespace {

double norm_inf(const Point& a, const Point& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double scale_of(const Point& p) {
  double s = 1.0;
  for (double v : p) s = std::max(s, std::abs(v));
  return s;
}

std::vector<Point> subsample(const std::vector<Point>& pts, size_t count) {
  if (pts.size() <= count) return pts;
  std::vector<Point> out;
  for (size_t i = 0; i < count; ++i) {
    size_t k = (count == 1) ? pts.size() / 2 : i * (pts.size() - 1) / (count - 1);
    out.push_back(pts[k]);
  }
  return out;
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

double min_singular_ratio(const Eigen::MatrixXd& m, double* smin_out = nullptr) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  if (smin_out) *smin_out = s(s.size() - 1);
  if (s(0) == 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

}  // namespace

const char* locus_kind_name(LocusKind kind) {
  switch (kind) {
    case LocusKind::PointSet: return "PointSet";
    case LocusKind::OpenSubdomain: return "OpenSubdomain";
    case LocusKind::Submanifold: return "Submanifold";
  }
  return "?";
}

const char* region_name(Region r) {
  switch (r) {
    case Region::Block1Only: return "Block1Only";
    case Region::Locus: return "Locus";
    case Region::Block2Only: return "Block2Only";
  }
  return "?";
}

std::string format_point(const Point& p) {
  std::ostringstream os;
  os.precision(10);
  os << "(";
  for (size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
  os << ")";
  return os.str();
}

std::string format_point(const GluedPoint& p) { return std::string(region_name(p.region)) + format_point(p.coords); }

EuclideanBlock::EuclideanBlock(int dim, std::vector<Expr> domain, Box sample_box, std::vector<Point> seeds)
    : dim_(dim), domain_(std::move(domain)), box_(std::move(sample_box)), seeds_(std::move(seeds)) {
  if (dim_ < 1 || dim_ > kMaxPartials) {
    throw Error(ErrorCode::ValidationError, "block dimension must be between 1 and " + std::to_string(kMaxPartials));
  }
  for (const auto& e : domain_) {
    if (e.arity() > dim_) throw Error(ErrorCode::DimensionMismatch, "domain inequality uses too many coordinates");
  }
  if (box_.empty()) box_.assign(dim_, {-1.5, 1.5});
  if (static_cast<int>(box_.size()) != dim_) throw Error(ErrorCode::DimensionMismatch, "sample box dimension");
  if (seeds_.empty()) {
    Point c(dim_);
    for (int i = 0; i < dim_; ++i) c[i] = 0.5 * (box_[i].first + box_[i].second);
    if (contains(c)) seeds_.push_back(c);
    else if (auto g = grid(4); !g.empty()) seeds_.push_back(g.front());
  }
  for (const auto& s : seeds_) {
    if (static_cast<int>(s.size()) != dim_) throw Error(ErrorCode::DimensionMismatch, "seed point dimension");
  }
}

bool EuclideanBlock::contains(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) return false;
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  for (const auto& e : domain_) {
    if (!(e.eval(x) > 0.0)) return false;
  }
  return true;
}

std::vector<Point> EuclideanBlock::grid(int per_axis) const {
  std::vector<Point> out;
  for (auto& p : cell_grid(box_, per_axis)) {
    if (contains(p)) out.push_back(std::move(p));
  }
  return out;
}

void EuclideanBlock::validate(const Tolerances& tol) const {
  if (seeds_.empty()) throw Error(ErrorCode::ValidationError, "block has no interior seed point");
  for (const auto& s : seeds_) {
    if (!contains(s)) throw Error(ErrorCode::ValidationError, "seed " + format_point(s) + " is outside the block domain");
    for (int i = 0; i < dim_; ++i) {
      for (double sign : {-1.0, 1.0}) {
        Point q = s;
        q[i] += sign * tol.domain;
        if (!contains(q)) {
          throw Error(ErrorCode::ValidationError, "block domain is not open around seed " + format_point(s));
        }
      }
    }
  }
}

GluingLocus GluingLocus::point_set(std::vector<Point> points) {
  GluingLocus l;
  l.kind_ = LocusKind::PointSet;
  l.points_ = std::move(points);
  return l;
}

GluingLocus GluingLocus::open_subdomain(std::vector<Expr> predicate, std::vector<Point> seeds) {
  GluingLocus l;
  l.kind_ = LocusKind::OpenSubdomain;
  l.predicate_ = std::move(predicate);
  l.seeds_ = std::move(seeds);
  return l;
}

GluingLocus GluingLocus::submanifold(Field param_map, Box param_box, std::vector<Point> param_seeds) {
  GluingLocus l;
  l.kind_ = LocusKind::Submanifold;
  if (param_box.empty()) param_box.assign(param_map.in_dim(), {-1.0, 1.0});
  if (static_cast<int>(param_box.size()) != param_map.in_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "parameter box dimension");
  }
  l.phi_ = std::move(param_map);
  l.param_box_ = std::move(param_box);
  l.seeds_ = std::move(param_seeds);
  return l;
}

bool GluedSpace::project_to_submanifold(const Point& p, Point& param) const {
  const Field& phi = locus_.param_map();
  const int k = phi.in_dim();
  Point best;
  double best_res = std::numeric_limits<double>::infinity();
  for (const auto& t0 : param_starts_) {
    double r = norm_inf(phi(t0), p);
    if (r < best_res) {
      best_res = r;
      best = t0;
    }
  }
  if (best.empty()) return false;
  Point t = best;
  for (int it = 0; it < 60; ++it) {
    Point v = phi(t);
    Eigen::VectorXd r(v.size());
    for (size_t i = 0; i < v.size(); ++i) r(i) = p[i] - v[i];
    if (r.lpNorm<Eigen::Infinity>() <= 1e-14 * scale_of(p)) break;
    Eigen::MatrixXd j = jacobian_matrix(phi, t);
    Eigen::VectorXd step = j.colPivHouseholderQr().solve(r);
    for (int i = 0; i < k; ++i) t[i] += step(i);
    if (step.lpNorm<Eigen::Infinity>() <= 1e-15 * scale_of(t)) break;
  }
  param = t;
  return norm_inf(phi(t), p) <= tol_.numeric * scale_of(p);
}

bool GluedSpace::in_locus(std::span<const double> p, Point* param) const {
  if (!b1_.contains(p)) return false;
  Point x(p.begin(), p.end());
  switch (locus_.kind()) {
    case LocusKind::PointSet:
      for (const auto& y : locus_.points()) {
        if (norm_inf(x, y) <= tol_.numeric * scale_of(y)) return true;
      }
      return false;
    case LocusKind::OpenSubdomain:
      for (const auto& e : locus_.predicate()) {
        if (!(e.eval(p) > 0.0)) return false;
      }
      return true;
    case LocusKind::Submanifold: {
      Point t;
      if (!project_to_submanifold(x, t)) return false;
      if (param) *param = t;
      return true;
    }
  }
  return false;
}

std::optional<Point> GluedSpace::locus_preimage(const Point& q, Point* param) const {
  if (!b2_.contains(q)) return std::nullopt;
  Point y = map_.inverse(q);
  if (locus_.kind() == LocusKind::PointSet) {
    for (const auto& p : locus_.points()) {
      if (norm_inf(map_.forward(p), q) <= tol_.numeric * scale_of(q)) return p;
    }
    return std::nullopt;
  }
  if (!in_locus(y, param)) return std::nullopt;
  if (norm_inf(map_.forward(y), q) > tol_.numeric * scale_of(q)) return std::nullopt;
  return y;
}

GluedPoint GluedSpace::classify(BlockTag block, const Point& coords) const {
  GluedPoint g;
  if (block == BlockTag::First) {
    if (!b1_.contains(coords)) throw Error(ErrorCode::OutsideDomain, format_point(coords) + " is not in block 1");
    Point param;
    if (in_locus(coords, &param)) {
      g.region = Region::Locus;
      if (locus_.kind() == LocusKind::PointSet) {
        for (const auto& y : locus_.points()) {
          if (norm_inf(coords, y) <= tol_.numeric * scale_of(y)) g.coords = y;
        }
      } else {
        g.coords = coords;
      }
      g.param = param;
    } else {
      g.region = Region::Block1Only;
      g.coords = coords;
    }
    return g;
  }
  if (!b2_.contains(coords)) throw Error(ErrorCode::OutsideDomain, format_point(coords) + " is not in block 2");
  Point param;
  if (auto y = locus_preimage(coords, &param)) {
    g.region = Region::Locus;
    g.coords = *y;
    if (locus_.kind() == LocusKind::Submanifold) in_locus(*y, &g.param);
  } else {
    g.region = Region::Block2Only;
    g.coords = coords;
  }
  return g;
}

Point GluedSpace::unembed(const GluedPoint& p, BlockTag block) const {
  if (block == BlockTag::First) {
    if (p.region == Region::Block2Only) {
      throw Error(ErrorCode::NotInImage, format_point(p) + " is not in the image of block 1");
    }
    return p.coords;
  }
  if (p.region == Region::Block1Only) {
    throw Error(ErrorCode::NotInImage, format_point(p) + " is not in the image of block 2");
  }
  return p.region == Region::Locus ? map_.forward(p.coords) : p.coords;
}

Eigen::MatrixXd GluedSpace::gluing_jacobian(const Point& y, const DiffConfig& cfg) const {
  return jacobian_matrix(map_.forward, y, cfg);
}

Eigen::MatrixXd GluedSpace::locus_tangent(const GluedPoint& p, const DiffConfig& cfg) const {
  switch (locus_.kind()) {
    case LocusKind::PointSet:
      return Eigen::MatrixXd(n1(), 0);
    case LocusKind::OpenSubdomain:
      return Eigen::MatrixXd::Identity(n1(), n1());
    case LocusKind::Submanifold: {
      Point t = p.param;
      if (t.empty() && !in_locus(p.coords, &t)) {
        throw Error(ErrorCode::OutsideDomain, format_point(p) + " is not on the locus");
      }
      return jacobian_matrix(locus_.param_map(), t, cfg);
    }
  }
  return {};
}

std::vector<GluedPoint> GluedSpace::locus_samples(const SamplePlan& plan) const {
  std::vector<GluedPoint> out;
  auto push = [&](const Point& y, const Point& t) { out.push_back(GluedPoint{Region::Locus, y, t}); };
  switch (locus_.kind()) {
    case LocusKind::PointSet:
      for (const auto& y : locus_.points()) push(y, {});
      break;
    case LocusKind::OpenSubdomain: {
      std::vector<Point> inside;
      for (const auto& p : b1_.grid(plan.per_axis)) {
        if (in_locus(p)) inside.push_back(p);
      }
      auto seeds = locus_.seeds();
      size_t room = plan.locus > static_cast<int>(seeds.size()) ? plan.locus - seeds.size() : 0;
      for (const auto& s : seeds) push(s, {});
      for (const auto& p : subsample(inside, room)) push(p, {});
      break;
    }
    case LocusKind::Submanifold: {
      const int k = locus_.param_dim();
      int per = std::max(1, static_cast<int>(std::ceil(std::pow(double(plan.locus), 1.0 / k))));
      std::vector<Point> params = locus_.seeds();
      for (auto& t : subsample(cell_grid(locus_.param_box(), per), plan.locus)) params.push_back(t);
      for (const auto& t : params) push(locus_.param_map()(t), t);
      break;
    }
  }
  return out;
}

std::vector<GluedPoint> GluedSpace::Samples::all() const {
  std::vector<GluedPoint> v = block1_only;
  v.insert(v.end(), block2_only.begin(), block2_only.end());
  v.insert(v.end(), locus.begin(), locus.end());
  return v;
}

GluedSpace::Samples GluedSpace::samples(const SamplePlan& plan) const {
  Samples s;
  for (const auto& p : b1_.grid(plan.per_axis)) {
    auto g = classify(BlockTag::First, p);
    if (g.region == Region::Block1Only) s.block1_only.push_back(g);
  }
  for (const auto& p : b2_.grid(plan.per_axis)) {
    auto g = classify(BlockTag::Second, p);
    if (g.region == Region::Block2Only) s.block2_only.push_back(g);
  }
  s.locus = locus_samples(plan);
  return s;
}

std::vector<std::vector<GluedPoint>> GluedSpace::probes(const GluedPoint& x, const SamplePlan& plan,
                                                        double delta0) const {
  std::vector<std::vector<GluedPoint>> out;
  const bool second = x.region == Region::Block2Only;
  Point base = x.coords;
  const int n = second ? n2() : n1();
  const EuclideanBlock& b = second ? b2_ : b1_;
  for (int i = 0; i < n; ++i) {
    for (double sign : {-1.0, 1.0}) {
      std::vector<GluedPoint> seq;
      double delta = delta0;
      for (int k = 0; k < plan.probe_steps; ++k, delta *= plan.probe_ratio) {
        Point q = base;
        q[i] += sign * delta;
        if (!b.contains(q)) break;
        seq.push_back(classify(second ? BlockTag::Second : BlockTag::First, q));
      }
      if (static_cast<int>(seq.size()) == plan.probe_steps) out.push_back(std::move(seq));
    }
  }
  return out;
}

SpacePtr build_glued_space(EuclideanBlock b1, EuclideanBlock b2, GluingLocus locus, GluingMap map,
                           std::optional<HypothesisFlags> flags, const SamplePlan& plan, const Tolerances& tol) {
  b1.validate(tol);
  b2.validate(tol);
  const int n1 = b1.dim();
  const int n2 = b2.dim();
  if (map.forward.in_dim() != n1 || map.forward.out_dim() != n2) {
    throw Error(ErrorCode::DimensionMismatch, "gluing map must send R^" + std::to_string(n1) + " to R^" + std::to_string(n2));
  }
  if (map.inverse.in_dim() != n2 || map.inverse.out_dim() != n1) {
    throw Error(ErrorCode::DimensionMismatch, "inverse gluing map has the wrong shape");
  }

  auto space = std::make_shared<GluedSpace>();
  space->b1_ = std::move(b1);
  space->b2_ = std::move(b2);
  space->locus_ = std::move(locus);
  space->map_ = std::move(map);
  space->tol_ = tol;

  const GluingLocus& L = space->locus_;
  switch (L.kind()) {
    case LocusKind::PointSet:
      for (const auto& y : L.points()) {
        if (static_cast<int>(y.size()) != n1) throw Error(ErrorCode::DimensionMismatch, "locus point dimension");
        if (!space->b1_.contains(y)) {
          throw Error(ErrorCode::LocusOutsideBlock, "locus point " + format_point(y) + " is outside block 1");
        }
      }
      break;
    case LocusKind::OpenSubdomain:
      for (const auto& e : L.predicate()) {
        if (e.arity() > n1) throw Error(ErrorCode::DimensionMismatch, "locus predicate uses too many coordinates");
      }
      for (const auto& s : L.seeds()) {
        if (!space->b1_.contains(s)) {
          throw Error(ErrorCode::LocusOutsideBlock, "locus seed " + format_point(s) + " is outside block 1");
        }
        if (!space->in_locus(s)) {
          throw Error(ErrorCode::ValidationError, "locus seed " + format_point(s) + " fails the locus predicate");
        }
      }
      break;
    case LocusKind::Submanifold: {
      const Field& phi = L.param_map();
      if (phi.out_dim() != n1) throw Error(ErrorCode::DimensionMismatch, "submanifold map must land in block 1");
      if (phi.in_dim() >= n1) {
        throw Error(ErrorCode::ValidationError, "submanifold parameter dimension must be below the block dimension");
      }
      space->param_starts_ = L.seeds();
      for (auto& t : cell_grid(L.param_box(), 8)) space->param_starts_.push_back(t);
      break;
    }
  }

  auto samples = space->locus_samples(plan);
  if (samples.empty()) throw Error(ErrorCode::ValidationError, "locus has no sample points");
  for (const auto& gp : samples) {
    const Point& y = gp.coords;
    if (!space->b1_.contains(y)) {
      throw Error(ErrorCode::LocusOutsideBlock, "locus point " + format_point(y) + " is outside block 1");
    }
    Point fy = space->map_.forward(y);
    if (!space->b2_.contains(fy)) {
      throw Error(ErrorCode::LocusOutsideBlock, "gluing image " + format_point(fy) + " of " + format_point(y) +
                                                    " is outside block 2");
    }
    Point back = space->map_.inverse(fy);
    if (norm_inf(back, y) > tol.numeric * scale_of(y)) {
      throw Error(ErrorCode::NotADiffeomorphism, "inverse does not undo the gluing map at " + format_point(y));
    }
    Point again = space->map_.forward(back);
    if (norm_inf(again, fy) > tol.numeric * scale_of(fy)) {
      throw Error(ErrorCode::NotADiffeomorphism, "gluing map does not undo the inverse at " + format_point(fy));
    }
    if (L.kind() == LocusKind::PointSet) continue;

    Eigen::MatrixXd j = space->gluing_jacobian(y);
    Eigen::MatrixXd jinv = jacobian_matrix(space->map_.inverse, fy);
    if (!all_finite(j) || !all_finite(jinv)) {
      throw Error(ErrorCode::NotADiffeomorphism, "gluing map is not differentiable at " + format_point(y));
    }
    Eigen::MatrixXd tangent = space->locus_tangent(gp);
    if (L.kind() == LocusKind::Submanifold &&
        (tangent.cols() == 0 || min_singular_ratio(tangent) <= tol.sigma_cutoff)) {
      throw Error(ErrorCode::ValidationError, "submanifold parametrization is singular at " + format_point(y));
    }
    double smin = 0.0;
    double ratio = min_singular_ratio(j * tangent, &smin);
    if (ratio <= tol.sigma_cutoff || smin <= tol.sigma_cutoff) {
      throw Error(ErrorCode::NotADiffeomorphism, "gluing map jacobian is singular along the locus at " + format_point(y));
    }
    if (L.kind() == LocusKind::OpenSubdomain) {
      if (n1 != n2) throw Error(ErrorCode::NotADiffeomorphism, "open loci need blocks of equal dimension");
      double err = max_abs(jinv * j - Eigen::MatrixXd::Identity(n1, n1));
      if (err > 1e-6) {
        throw Error(ErrorCode::NotADiffeomorphism, "inverse jacobian does not invert the jacobian at " + format_point(y));
      }
    }
  }

  if (flags) {
    space->flags_ = *flags;
  } else {
    bool ok = structural_hypotheses_hold(*space, plan);
    space->flags_ = HypothesisFlags{ok, ok};
  }
  if (!space->flags_.pullback_equality || !space->flags_.omega_equality) {
    throw Error(ErrorCode::HypothesisNotAsserted, "both pullback hypotheses must hold before gluing");
  }
  return space;
}

bool structural_hypotheses_hold(const GluedSpace& space, const SamplePlan& plan) {
  if (space.locus().kind() == LocusKind::PointSet) return true;
  const double cut = space.tolerances().sigma_cutoff;
  for (const auto& gp : space.locus_samples(plan)) {
    Eigen::MatrixXd v = space.locus_tangent(gp);
    Eigen::MatrixXd w = space.gluing_jacobian(gp.coords) * v;
    if (min_singular_ratio(v) <= cut || min_singular_ratio(w) <= cut) return false;
  }
  return true;
}

GluedPoint parse_point(const GluedSpace& space, const std::string& spec) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::ParseError, "point must look like region:c1,c2");
  std::string region = spec.substr(0, colon);
  Point coords;
  std::stringstream ss(spec.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      coords.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad coordinate '" + item + "'");
    }
  }
  if (region == "block1" || region == "b1") return space.classify(BlockTag::First, coords);
  if (region == "block2" || region == "b2") return space.classify(BlockTag::Second, coords);
  if (region == "locus") {
    auto g = space.classify(BlockTag::First, coords);
    if (g.region != Region::Locus) throw Error(ErrorCode::OutsideDomain, format_point(coords) + " is not on the locus");
    return g;
  }
  throw Error(ErrorCode::ParseError, "unknown region '" + region + "'");
}

}  // namespace dglue
