#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ddeopt/core_model.hpp"

namespace ddeopt {

// Samples of g on a uniform partition of [alpha, beta]. Off-grid values come
// from `exact` when set, else from linear interpolation.
struct SampledFunction {
  double alpha = 0.0, beta = 1.0;
  Vector values;
  std::function<double(double)> exact;

  static SampledFunction sample(std::function<double(double)> g, double alpha, double beta,
                                int intervals, bool keep_exact = true);

  int intervals() const { return static_cast<int>(values.size()) - 1; }
  double step() const { return (beta - alpha) / intervals(); }
  double node(int i) const { return alpha + i * step(); }
  double operator()(double t) const;
};

// h = 2^-4, ..., 2^-20
std::vector<double> default_scales();

// Finite-scale surrogates: extrema over the given scales of the one-sided
// difference quotients. They are not the limits.
double dini_upper_right(const SampledFunction& f, double t, const std::vector<double>& scales = default_scales());
double dini_lower_right(const SampledFunction& f, double t, const std::vector<double>& scales = default_scales());
double dini_upper_left(const SampledFunction& f, double t, const std::vector<double>& scales = default_scales());
double dini_lower_left(const SampledFunction& f, double t, const std::vector<double>& scales = default_scales());

// min and max over all pairs of grid difference quotients
std::pair<double, double> quotient_bounds(const SampledFunction& f);

struct FtcReport {
  bool premise_holds = true;            // D_-g >= mu - tol at every interior node
  std::vector<double> premise_failures; // nodes where it does not
  double lhs = 0.0;                     // g(beta) - g(alpha)
  double rhs = 0.0;                     // trapezoid integral of mu
  double tolerance = 0.0;
  bool conclusion_holds = true;         // lhs >= rhs - tolerance
};

FtcReport generalized_ftc_check(const SampledFunction& g, const SampledFunction& mu,
                                const std::vector<double>& scales = default_scales(),
                                double tol = 1e-9);

// Ternary-digit construction truncated at depth <= 40. Exact on triadic
// rationals of that depth, nondecreasing, f(0) = 0, f(1) = 1.
double cantor_function(double x, int depth = 30);

bool monotonicity_check(const SampledFunction& g, double tol = 0.0);

std::string to_text(const FtcReport& r);

}  // namespace ddeopt
