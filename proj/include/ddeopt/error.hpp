#pragma once

#include <stdexcept>
#include <string>

namespace ddeopt {

enum class ErrorCode {
  ConfigMismatch,
  InvalidArgument,
  NonFiniteState,
  Inadmissible,
  DivisionByZero,
  NoConvergence,
  NonPositiveSlope,
  OutOfDomain,
  GradientFailure,
  PositivityLoss,
  SweepExhausted,
  NoFeasibleNu,
  DegenerateUtility,
  OutOfRange,
  UnknownPreset,
  Io
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ddeopt
