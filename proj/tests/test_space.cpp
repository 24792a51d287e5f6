#include "doctest.h"

#include "fixtures.hpp"

using namespace dglue;
using fixtures::X;

TEST_CASE("cross: both origins land on the locus") {
  auto s = fixtures::cross();
  auto a = s->embed(BlockTag::First, {0.0});
  auto b = s->embed(BlockTag::Second, {0.0});
  CHECK(a.region == Region::Locus);
  CHECK(b.region == Region::Locus);
  CHECK(a.coords == b.coords);
  CHECK(s->embed(BlockTag::First, {1.0}).region == Region::Block1Only);
  CHECK(s->embed(BlockTag::Second, {-0.3}).region == Region::Block2Only);
}

TEST_CASE("cross: block-1 only points are outside the second image") {
  auto s = fixtures::cross();
  auto p = s->embed(BlockTag::First, {1.0});
  CHECK_THROWS_AS(s->unembed(p, BlockTag::Second), Error);
  CHECK(s->unembed(p, BlockTag::First) == Point{1.0});
}

TEST_CASE("line-ray: negative block-2 points are identified") {
  auto s = fixtures::line_ray();
  auto p = s->classify(BlockTag::Second, {-1.0});
  CHECK(p.region == Region::Locus);
  CHECK(p.coords[0] == doctest::Approx(-1.0));
  CHECK(s->classify(BlockTag::Second, {1.0}).region == Region::Block2Only);
  CHECK(s->classify(BlockTag::First, {0.0}).region == Region::Block1Only);
}

TEST_CASE("affine ray: locus points are stored in block-1 coordinates") {
  auto s = fixtures::affine_ray();
  // q = 2x + 1 with x = -0.5 on the locus gives q = 0
  auto p = s->classify(BlockTag::Second, {0.0});
  CHECK(p.region == Region::Locus);
  CHECK(p.coords[0] == doctest::Approx(-0.5));
  CHECK(s->unembed(p, BlockTag::Second)[0] == doctest::Approx(0.0));
  CHECK(s->classify(BlockTag::Second, {1.5}).region == Region::Block2Only);
}

TEST_CASE("classification is idempotent and consistent with the gluing") {
  for (auto s : {fixtures::cross(), fixtures::line_ray(), fixtures::plane_axis(), fixtures::affine_ray()}) {
    auto samples = s->samples(SamplePlan{});
    for (const auto& p : samples.all()) {
      BlockTag tag = p.region == Region::Block2Only ? BlockTag::Second : BlockTag::First;
      auto again = s->classify(tag, s->unembed(p, tag));
      CHECK(again.region == p.region);
      if (p.region == Region::Locus) {
        auto via2 = s->classify(BlockTag::Second, s->unembed(p, BlockTag::Second));
        CHECK(via2.region == Region::Locus);
        for (size_t i = 0; i < p.coords.size(); ++i) CHECK(via2.coords[i] == doctest::Approx(p.coords[i]));
      }
    }
  }
}

TEST_CASE("plane-axis classification") {
  auto s = fixtures::plane_axis();
  auto p = s->classify(BlockTag::First, {0.3, 0.0});
  CHECK(p.region == Region::Locus);
  REQUIRE(p.param.size() == 1);
  CHECK(p.param[0] == doctest::Approx(0.3));
  CHECK(s->classify(BlockTag::First, {0.3, 0.2}).region == Region::Block1Only);
  CHECK(s->classify(BlockTag::Second, {-0.7, 0.0}).region == Region::Locus);
}

TEST_CASE("a cubic gluing map is rejected") {
  GluingMap f{Field::from_expr(1, pow(X(0), 3)), Field::from_expr(1, cbrt(X(0)))};
  auto locus = GluingLocus::open_subdomain({Expr(1.0) - pow(X(0), 2)}, {{0.0}});
  try {
    build_glued_space(EuclideanBlock(1), EuclideanBlock(1), locus, f);
    FAIL("expected NotADiffeomorphism");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotADiffeomorphism);
  }
}

TEST_CASE("locus points must lie in the first block") {
  EuclideanBlock b1(1, {Expr(1.0) - pow(X(0), 2)});
  try {
    build_glued_space(b1, EuclideanBlock(1), GluingLocus::point_set({{5.0}}), fixtures::identity_map(1));
    FAIL("expected LocusOutsideBlock");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LocusOutsideBlock);
  }
}

TEST_CASE("gluing refuses unasserted hypotheses") {
  try {
    build_glued_space(EuclideanBlock(1), EuclideanBlock(1), GluingLocus::open_subdomain({-X(0)}),
                      fixtures::identity_map(1), HypothesisFlags{true, false});
    FAIL("expected HypothesisNotAsserted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HypothesisNotAsserted);
  }
}

TEST_CASE("structural hypothesis check") {
  CHECK(structural_hypotheses_hold(*fixtures::cross(), SamplePlan{}));
  CHECK(structural_hypotheses_hold(*fixtures::line_ray(), SamplePlan{}));
  CHECK(structural_hypotheses_hold(*fixtures::plane_axis(), SamplePlan{}));
}

TEST_CASE("block openness probe") {
  EuclideanBlock closed_ish(1, {Expr(1.0) - pow(X(0), 2)}, {{-1.0, 1.0}}, {{0.9995}});
  CHECK_THROWS_AS(closed_ish.validate(Tolerances{}), Error);
  EuclideanBlock fine(1, {Expr(1.0) - pow(X(0), 2)}, {{-1.0, 1.0}}, {{0.5}});
  CHECK_NOTHROW(fine.validate(Tolerances{}));
}

TEST_CASE("point specs parse into glued points") {
  auto s = fixtures::cross();
  CHECK(parse_point(*s, "b2:0").region == Region::Locus);
  CHECK(parse_point(*s, "block1:2.5").region == Region::Block1Only);
  CHECK_THROWS_AS(parse_point(*s, "locus:1"), Error);
  CHECK_THROWS_AS(parse_point(*s, "nowhere:1"), Error);
}

TEST_CASE("sample partition") {
  auto s = fixtures::line_ray();
  auto samples = s->samples(SamplePlan{});
  CHECK(samples.block1_only.size() == 8);
  CHECK(samples.block2_only.size() == 8);
  CHECK(samples.locus.size() == 8);
  for (const auto& p : samples.locus) CHECK(p.coords[0] < 0.0);
}
