#pragma once

#include <stdexcept>
#include <string>

namespace dglue {

enum class ErrorCode {
  LocusOutsideBlock,
  NotADiffeomorphism,
  HypothesisNotAsserted,
  OutsideDomain,
  NotInImage,
  NonSmoothField,
  DimensionMismatch,
  IncompatiblePair,
  IncompatibleSections,
  NotAFunctionOnGluedSpace,
  IncompatibleMetrics,
  SingularGram,
  IncompatibleConnections,
  ModesDisagree,
  RankAmbiguous,
  ParseError,
  ValidationError,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dglue
