#pragma once

#include "ddeopt/core_model.hpp"

namespace ddeopt {

struct HamiltonianValue {
  double h = 0.0;       // sup_{c >= 0} U1(c) - zeta0 c
  double c_star = 0.0;  // the maximizer
  bool converged = false;
  double residual = 0.0;  // |U1'(c_star) - zeta0| / (1 + zeta0)
  int iterations = 0;
};

HamiltonianValue legendre(const UtilitySpec& u1, double zeta0);

}  // namespace ddeopt
