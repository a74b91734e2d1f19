#pragma once

#include <cmath>

#include "ddeopt/delay_dynamics.hpp"

namespace ddeopt::detail {

// state steps per control step; 0 for an empty control
inline int control_ratio(const ProblemConfig& cfg, const ControlPath& c) {
  if (c.values.size() == 0) return 0;
  if (!(c.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "control step must be positive");
  if (c.values.minCoeff() < 0.0)
    throw Error(ErrorCode::InvalidArgument, "control values must be nonnegative");
  const double q = c.dt / cfg.state_step();
  const long n = std::lround(q);
  if (n < 1 || std::abs(q - n) > 1e-9 * q)
    throw Error(ErrorCode::ConfigMismatch, "control step is not a multiple of the state step");
  return static_cast<int>(n);
}

inline double control_at_step(const ControlPath& c, int ratio, int i) {
  if (ratio == 0) return 0.0;
  const int j = i / ratio;
  return j < c.values.size() ? c.values[j] : 0.0;
}

}  // namespace ddeopt::detail
