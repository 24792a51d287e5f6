#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dglue/suites.hpp"

namespace {

constexpr int kSuiteFailure = 1;
constexpr int kInputError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification runs over glued Euclidean blocks"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::vector<std::string> suites;
  std::string mode;
  std::uint64_t seed = 0;
  std::string report_out;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run verification suites on a scenario");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--suite", suites, "Suite to run (repeatable)");
  run->add_option("--mode", mode, "Differentiation mode")->check(CLI::IsMember({"dual", "fd"}));
  auto* seed_opt = run->add_option("--seed", seed, "Sampling seed");
  run->add_option("--report-out", report_out, "Write the JSON report here");
  run->add_flag("--quiet", quiet, "Suppress the text report");

  std::string inspect_path, point;
  auto* inspect = app.add_subcommand("inspect", "Print fibre, Gram and Christoffel data at a point");
  inspect->add_option("scenario", inspect_path, "Scenario file")->required();
  inspect->add_option("--point", point, "Point as region:c1,c2,... with region block1|block2|locus")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      dglue::RunOptions opts;
      opts.suites = suites;
      if (!mode.empty()) opts.mode = dglue::parse_mode(mode);
      if (*seed_opt) opts.seed = seed;
      auto report = dglue::run_scenario(dglue::load_scenario(scenario_path), opts);
      if (!quiet) std::cout << dglue::report_text(report);
      if (!report_out.empty()) {
        std::ofstream out(report_out);
        if (!out) {
          std::cerr << "cannot write " << report_out << "\n";
          return kInputError;
        }
        out << dglue::report_json(report);
      }
      return report.passed() ? 0 : kSuiteFailure;
    }
    std::cout << dglue::inspect_point(dglue::load_scenario(inspect_path), point);
    return 0;
  } catch (const dglue::Error& e) {
    std::cerr << e.what() << "\n";
    return kInputError;
  }
}
