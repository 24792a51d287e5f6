#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dglue/space.hpp"

namespace dglue {

const std::vector<std::string>& suite_catalogue();

enum class ConnectionKind { None, LeviCivita, Explicit };

// Everything a verification run needs, parsed but not yet validated
// geometrically (that happens when the space is built).
struct Scenario {
  std::string name;
  EuclideanBlock block1, block2;
  GluingLocus locus;
  GluingMap gluing;
  std::optional<HypothesisFlags> hypotheses;

  bool has_metrics = false;
  std::vector<Expr> gram1, gram2;  // row-major n x n

  ConnectionKind connections = ConnectionKind::None;
  std::vector<Expr> christoffel1, christoffel2;  // k*n*n + i*n + j

  DiffConfig diff;
  SamplePlan plan;
  Tolerances tol;
  std::vector<std::string> suites;
};

// Syntax errors report line and column; schema errors report the JSON
// pointer of the offending field.  Both raise ParseError.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>");
Scenario load_scenario(const std::string& path);

// Scalar field in n variables from its JSON encoding.
Expr parse_scalar_field(const std::string& json_text, int n);

}  // namespace dglue
