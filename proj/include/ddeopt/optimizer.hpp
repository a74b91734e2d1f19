#pragma once

#include <functional>
#include <string>

#include "ddeopt/core_model.hpp"

namespace ddeopt {

// Returns f(x) and fills *grad when non-null; -inf marks an infeasible point.
using AscentObjective = std::function<double(const Vector& x, Vector* grad)>;

struct AscentOptions {
  int max_iter = 500;
  int memory = 12;
  double grad_tol = 1e-10;  // projected gradient, max norm
  double f_tol = 1e-13;     // relative gain over stall_window iterations
  int stall_window = 10;
  double initial_step = 0.1;
};

struct AscentResult {
  Vector x;
  Vector grad;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  double projected_gradient = 0.0;
  double recent_gain = 0.0;  // sum of the last stall_window gains
  bool converged = false;
  std::string stop_reason;
};

// Maximizes f over the orthant x >= 0 by projected L-BFGS with an active set
// and Armijo backtracking along the projected path.
AscentResult projected_ascent(const AscentObjective& f, Vector x0, const AscentOptions& opt = {});

// Projected Newton on the same orthant. The Hessian of the free block comes from
// one-sided differences of the gradient; negative curvature is shifted away.
// Quadratic convergence near a smooth maximizer, 2 + free-count evaluations per step.
AscentResult projected_newton(const AscentObjective& f, Vector x0, const AscentOptions& opt = {});

double projected_gradient_norm(const Vector& x, const Vector& g);

}  // namespace ddeopt
