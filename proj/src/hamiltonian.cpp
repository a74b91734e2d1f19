#include "ddeopt/hamiltonian.hpp"

#include <cmath>
#include <string>

namespace ddeopt {

namespace {

double second_derivative(const UtilitySpec& u, double c) {
  if (u.u_second) return u.u_second(c);
  const double h = 1e-6 * c;
  return (u.u_prime(c + h) - u.u_prime(c - h)) / (2.0 * h);
}

}  // namespace

HamiltonianValue legendre(const UtilitySpec& u1, double zeta0) {
  if (!(zeta0 > 0.0))
    throw Error(ErrorCode::NonPositiveSlope, "shadow price must be positive, got " + std::to_string(zeta0));
  HamiltonianValue out;
  const double tol = 1e-12 * (1.0 + zeta0);
  auto g = [&](double c) { return u1.u_prime(c) - zeta0; };  // decreasing in c

  // bracket: g(lo) > 0 > g(hi)
  double lo = 1e-12, hi = 1.0;
  while (g(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw Error(ErrorCode::NoConvergence, "no bracket for U1' = zeta0");
  }
  while (g(lo) < 0.0) {
    hi = lo;
    lo *= 1e-3;
    if (lo < 1e-300) {
      // marginal utility never reaches zeta0: the supremum sits at c = 0
      out.c_star = 0.0;
      out.h = u1.u(0.0);
      out.converged = true;
      out.residual = 0.0;
      return out;
    }
  }

  // bisection in log scale down to a relative width of 1e-3, then safeguarded Newton
  int it = 0;
  while (hi / lo > 1.001 && it < 200) {
    const double mid = std::sqrt(lo * hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
    ++it;
  }
  double c = std::sqrt(lo * hi);
  double gc = g(c);
  for (int k = 0; k < 100 && std::abs(gc) > tol; ++k, ++it) {
    const double d = second_derivative(u1, c);
    double next = (d < 0.0) ? c - gc / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    c = next;
    gc = g(c);
    (gc > 0.0 ? lo : hi) = c;
    if (hi - lo <= 4e-16 * hi) break;
  }
  out.c_star = c;
  out.h = u1.u(c) - zeta0 * c;
  out.residual = std::abs(gc) / (1.0 + zeta0);
  out.converged = std::abs(gc) <= tol || hi - lo <= 4e-16 * hi;
  out.iterations = it;
  return out;
}

}  // namespace ddeopt
