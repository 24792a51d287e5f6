#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dglue/connection.hpp"
#include "dglue/scenario.hpp"

namespace dglue {

// Lazily built objects of a scenario.  A construction failure is cached and
// rethrown on every later access.
class ScenarioContext {
 public:
  explicit ScenarioContext(Scenario sc);

  const Scenario& scenario() const { return sc_; }
  const SpacePtr& space();
  const BlockMetric& g1();
  const BlockMetric& g2();
  const GluedMetric& metric();
  // Factor connections named by the scenario (explicit or Levi-Civita).
  const BlockConnection& c1();
  const BlockConnection& c2();
  const GluedConnection& connection();
  const std::vector<GluedPoint>& points();
  const SectionFamily& coherent();
  const SectionFamily& compatible();
  const FunctionFamily& functions();

 private:
  template <typename T>
  struct Slot {
    std::optional<T> value;
    std::exception_ptr error;
  };
  template <typename T, typename F>
  const T& get(Slot<T>& slot, F make);

  Scenario sc_;
  Slot<SpacePtr> space_;
  Slot<BlockMetric> g1_, g2_;
  Slot<GluedMetric> metric_;
  Slot<BlockConnection> c1_, c2_;
  Slot<std::shared_ptr<GluedConnection>> conn_;
  Slot<std::vector<GluedPoint>> points_;
  Slot<SectionFamily> coherent_, compatible_;
  Slot<FunctionFamily> functions_;
};

struct SuiteResult {
  std::string suite;
  bool passed = true;
  CheckResult check;
  std::string mode;
  std::uint64_t seed = 0;
  double fd_max_discrepancy = 0.0;
  int fd_points = 0;
  std::vector<std::string> notes;
  double wall_time = 0.0;
};

struct RunOptions {
  std::vector<std::string> suites;  // empty: the scenario's selection
  std::optional<DiffMode> mode;
  std::optional<std::uint64_t> seed;
};

struct Report {
  std::string scenario;
  std::string mode;
  std::uint64_t seed = 0;
  std::vector<SuiteResult> results;
  bool passed() const;
};

// Applies the option overrides to the scenario.
Scenario apply_options(Scenario sc, const RunOptions& opts);

SuiteResult run_suite(const std::string& name, ScenarioContext& ctx);
Report run_scenario(const Scenario& sc, const RunOptions& opts = {});

std::string report_json(const Report& r, bool timing = true);
std::string report_text(const Report& r);

// Human-readable fibre, Gram and Christoffel data at "<region>:<coords>".
std::string inspect_point(const Scenario& sc, const std::string& point_spec);

}  // namespace dglue
