#pragma once

#include <string>
#include <vector>

#include "dglue/forms.hpp"

namespace dglue {

// Deterministic sample families used by the checks and suites.
struct SectionFamily {
  std::vector<LambdaSection> sections;
  std::vector<std::string> labels;
};

struct FunctionFamily {
  std::vector<GluedFunction> functions;
  std::vector<std::string> labels;
};

// Random polynomial of total degree <= degree in n variables, coefficients
// uniform in [-1, 1].
Expr random_polynomial(int n, int degree, Rng& rng);

// f* of a block-2 covector field given by expressions, built symbolically.
std::vector<Expr> pullback_exprs(const std::vector<Expr>& form, const std::vector<Expr>& map, int in_dim);

// Multiplier on block 1 vanishing to fourth order on the locus (zero for open
// loci and for loci it cannot describe), and its transport to block 2.
Expr locus_multiplier(const GluedSpace& space);

// Pairs (s1, s2) with s1 = f* s2 up to terms vanishing to fourth order on the
// locus: these are matched at every locus point together with their first
// derivatives.
SectionFamily coherent_sections(const SpacePtr& space, const SamplePlan& plan);

// Compatible pairs that need not be matched: on point loci the two
// restrictions are independent, on submanifolds they may differ in normal
// directions.
SectionFamily compatible_sections(const SpacePtr& space, const SamplePlan& plan);

// Glued functions h with h1 = h2 o f on the locus; off open loci the
// restrictions may differ in their normal derivatives.
FunctionFamily glued_functions(const SpacePtr& space, const SamplePlan& plan, int count = 5);

}  // namespace dglue
