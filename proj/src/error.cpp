#include "ddeopt/error.hpp"

namespace ddeopt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::Inadmissible: return "Inadmissible";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NonPositiveSlope: return "NonPositiveSlope";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::GradientFailure: return "GradientFailure";
    case ErrorCode::PositivityLoss: return "PositivityLoss";
    case ErrorCode::SweepExhausted: return "SweepExhausted";
    case ErrorCode::NoFeasibleNu: return "NoFeasibleNu";
    case ErrorCode::DegenerateUtility: return "DegenerateUtility";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace ddeopt
