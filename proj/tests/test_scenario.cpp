#include <functional>

#include <doctest.h>
#include <json.hpp>

#include "dglue/suites.hpp"

using namespace dglue;

namespace {

const std::string kDir = DGLUE_SCENARIO_DIR;

Scenario load(const std::string& name) { return load_scenario(kDir + "/" + name + ".json"); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::ValidationError;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

const char* kMinimal = R"({
  "blocks": {"block1": {"dim": 1}, "block2": {"dim": 1}},
  "locus": {"kind": "points", "points": [[0.0]]},
  "gluing": {"forward": {"identity": 1}, "inverse": {"identity": 1}}
})";

}  // namespace

TEST_CASE("scalar field encodings") {
  Expr p = parse_scalar_field(R"j({"poly": {"2,0": 1.5, "(0,1)": -1.0, "0,0": 2.0}})j", 2);
  CHECK(p({2.0, 3.0}) == doctest::Approx(1.5 * 4.0 - 3.0 + 2.0));
  Expr e = parse_scalar_field(R"({"exp": {"mul": [2.0, {"var": 1}]}})", 2);
  CHECK(e({0.0, 0.5}) == doctest::Approx(std::exp(1.0)));
  Expr q = parse_scalar_field(R"({"div": [{"pow": [{"var": 0}, 3]}, {"add": [1, {"neg": {"var": 0}}]}]})", 1);
  CHECK(q({0.5}) == doctest::Approx(0.125 / 0.5));
  CHECK(parse_scalar_field(R"({"cbrt": {"var": 0}})", 1)({-8.0}) == doctest::Approx(-2.0));
  CHECK(parse_scalar_field("4.25", 3)({0.0, 0.0, 0.0}) == 4.25);

  CHECK(code_of([] { parse_scalar_field(R"({"tan": {"var": 0}})", 1); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_scalar_field(R"({"var": 2})", 2); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_scalar_field(R"({"poly": {"2": 1.0}})", 2); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_scalar_field(R"({"poly": {"a,1": 1.0}})", 2); }) == ErrorCode::ParseError);
}

TEST_CASE("scenario defaults and overrides") {
  Scenario sc = parse_scenario(kMinimal);
  CHECK(sc.block1.dim() == 1);
  CHECK(sc.locus.kind() == LocusKind::PointSet);
  CHECK(sc.suites == suite_catalogue());
  CHECK(sc.diff.mode == DiffMode::ForwardDual);
  CHECK_FALSE(sc.hypotheses.has_value());

  RunOptions opts;
  opts.mode = DiffMode::FiniteDifference;
  opts.seed = 7;
  opts.suites = {"koszul"};
  Scenario o = apply_options(sc, opts);
  CHECK(o.diff.mode == DiffMode::FiniteDifference);
  CHECK(o.plan.seed == 7);
  CHECK(o.suites == std::vector<std::string>{"koszul"});
  opts.suites = {"bogus"};
  CHECK(code_of([&] { apply_options(sc, opts); }) == ErrorCode::ValidationError);
}

TEST_CASE("parse errors carry a line or a field") {
  std::string bad = "{\n  \"blocks\": {\n    \"block1\": {\"dim\": 1,}\n  }\n}";
  std::string msg = message_of([&] { parse_scenario(bad, "bad.json"); });
  CHECK(msg.find("ParseError") == 0);
  CHECK(msg.find("bad.json: line 3") != std::string::npos);

  auto with = [](const std::string& extra) {
    std::string s = kMinimal;
    s.insert(s.rfind('}'), ", " + extra);
    return s;
  };
  msg = message_of([&] { parse_scenario(with(R"("suites": ["fibres", "nope"])")); });
  CHECK(msg.find("field /suites/1") != std::string::npos);
  msg = message_of([&] { parse_scenario(with(R"("connections": {"levi_civita": "from_metric"})")); });
  CHECK(msg.find("/connections/levi_civita") != std::string::npos);
  msg = message_of([&] { parse_scenario(with(R"("colour": 1)")); });
  CHECK(msg.find("/colour: unknown key") != std::string::npos);
  msg = message_of([&] { parse_scenario(with(R"("metrics": {"g1": [[1.0, 0.0]], "g2": [[1.0]]})")); });
  CHECK(msg.find("/metrics/g1/0") != std::string::npos);
  msg = message_of([&] { parse_scenario(with(R"("diff": {"mode": "symbolic"})")); });
  CHECK(msg.find("/diff/mode") != std::string::npos);
  CHECK(code_of([] { load_scenario("/nonexistent/scenario.json"); }) == ErrorCode::ParseError);
}

TEST_CASE("bundled scenarios parse") {
  Scenario plane = load("plane_axis_gluing");
  CHECK(plane.locus.kind() == LocusKind::Submanifold);
  CHECK(plane.locus.param_dim() == 1);
  CHECK(plane.connections == ConnectionKind::LeviCivita);
  Scenario bad = load("halfline_incompatible_connections");
  REQUIRE(bad.connections == ConnectionKind::Explicit);
  CHECK(bad.christoffel2[0]({0.3}) == 1.0);
  CHECK(bad.christoffel1[0]({0.3}) == 0.0);
  CHECK(bad.suites == std::vector<std::string>{"leibniz"});
  Scenario cubic = load("cubic_gluing");
  CHECK(cubic.gluing.inverse({-8.0})[0] == doctest::Approx(-2.0));
}

TEST_CASE("cross_flat passes every suite") {
  Report r = run_scenario(load("cross_flat"));
  CHECK(r.passed());
  REQUIRE(r.results.size() == suite_catalogue().size());
  for (size_t i = 0; i < r.results.size(); ++i) {
    CHECK(r.results[i].suite == suite_catalogue()[i]);
    CHECK(r.results[i].check.samples > 0);
    CHECK(r.results[i].fd_points > 0);
  }
}

TEST_CASE("metric mismatch fails with the locus point and the pair") {
  Report r = run_scenario(load("halfline_mismatch"));
  CHECK_FALSE(r.passed());
  REQUIRE(r.results.size() == 1);
  const auto& s = r.results[0];
  CHECK(s.suite == "metric-gluing");
  REQUIRE_FALSE(s.check.witnesses.empty());
  CHECK(s.check.witnesses[0].location.find("Locus") == 0);
  CHECK(s.check.witnesses[0].detail.find("pair (1)|(1)") == 0);
  CHECK(s.check.max_residual == doctest::Approx(1.0));
}

TEST_CASE("a space that cannot be built fails every selected suite") {
  RunOptions opts;
  opts.suites = suite_catalogue();
  Report r = run_scenario(load("cubic_gluing"), opts);
  REQUIRE(r.results.size() == suite_catalogue().size());
  for (const auto& s : r.results) {
    CHECK_FALSE(s.passed);
    REQUIRE_FALSE(s.check.witnesses.empty());
    CHECK(s.check.witnesses[0].detail.find("NotADiffeomorphism") == 0);
  }
}

TEST_CASE("incompatible connections fail the Leibniz suite") {
  Report r = run_scenario(load("halfline_incompatible_connections"));
  REQUIRE(r.results.size() == 1);
  CHECK_FALSE(r.results[0].passed);
  REQUIRE_FALSE(r.results[0].check.witnesses.empty());
  CHECK(r.results[0].check.witnesses[0].detail.find("coordinate 0") == 0);
}

TEST_CASE("reports are deterministic and structured") {
  RunOptions opts;
  opts.suites = {"leibniz", "koszul", "torsion-split"};
  Scenario sc = load("halfline_curved");
  std::string a = report_json(run_scenario(sc, opts), false);
  std::string b = report_json(run_scenario(sc, opts), false);
  CHECK(a == b);
  opts.seed = 99;
  std::string c = report_json(run_scenario(sc, opts), false);
  CHECK(c != a);

  auto j = nlohmann::json::parse(report_json(run_scenario(sc, opts)));
  CHECK(j["status"] == "pass");
  REQUIRE(j["suites"].size() == 3);
  for (const auto& s : j["suites"]) {
    for (const char* key : {"suite", "status", "max_residual", "mean_residual", "witnesses", "samples", "mode", "seed",
                            "fd_max_discrepancy", "notes", "wall_time_s"}) {
      CHECK(s.contains(key));
    }
    CHECK(s["seed"] == 99);
    CHECK(s["mode"] == "dual");
  }
  std::string text = report_text(run_scenario(sc, opts));
  CHECK(text.find("torsion-split") != std::string::npos);
  CHECK(text.find("PASS (3/3 suites)") != std::string::npos);
}

TEST_CASE("inspect prints fibre, Gram and Christoffel data") {
  Scenario cross = load("cross_flat");
  std::string o = inspect_point(cross, "locus:0");
  CHECK(o.find("fibre dim 2\n") != std::string::npos);
  CHECK(o.find("basis (1,0),(0,1)\n") != std::string::npos);
  CHECK(o.find("gram diag(0.5,0.5)\n") != std::string::npos);
  CHECK(inspect_point(cross, "block1:1.0").find("fibre dim 1\n") != std::string::npos);
  CHECK(code_of([&] { inspect_point(cross, "somewhere"); }) == ErrorCode::ParseError);
  CHECK(code_of([&] { inspect_point(cross, "block1:abc"); }) == ErrorCode::ParseError);
  CHECK(code_of([&] { inspect_point(cross, "locus:1"); }) == ErrorCode::OutsideDomain);

  std::string h = inspect_point(load("halfline_curved"), "locus:-0.5");
  CHECK(h.find("basis (1,1)\n") != std::string::npos);
  // Levi-Civita symbol of the cometric 1 + x^2 is -x / (1 + x^2).
  CHECK(h.find("christoffel block1 at (-0.5): k=0 diag(0.4)") != std::string::npos);
}
