#pragma once

#include <iosfwd>
#include <vector>

#include "ddeopt/core_model.hpp"

namespace ddeopt {

struct ControlPath {
  double dt = 0.0;
  Vector values;  // consumption rate on [i dt, (i+1) dt); zero beyond the end

  static ControlPath constant(double dt, int steps, double c);
  double at(double t) const;
  double end() const { return dt * values.size(); }
};

struct Trajectory {
  double dt = 0.0;
  double start = 0.0;       // -T
  int history_points = 0;   // samples on [-T, 0)
  Vector values;            // x at start + k dt
  Vector controls;          // control of each forward step
  bool admissible = false;  // min over t >= 0 exceeds pos_tol
  double min_value = 0.0;   // min over t >= 0

  double time(int k) const { return start + k * dt; }
  int steps() const { return static_cast<int>(values.size()) - history_points - 1; }
  double state_at_step(int i) const { return values[history_points + i]; }
  double final_state() const { return values[values.size() - 1]; }
  // window (x(t_i), x(t_i + xi_j)) on the history grid of cfg
  HistoryState window(const ProblemConfig& cfg, int i) const;
};

Trajectory integrate(const ProblemConfig& cfg, const HistoryState& eta, const ControlPath& c,
                     double horizon);

std::vector<Trajectory> integrate_batch(const ProblemConfig& cfg,
                                        const std::vector<HistoryState>& etas,
                                        const std::vector<ControlPath>& controls, double horizon,
                                        int workers = 1);

enum class TailPolicy { ZeroControlContinuation, UpperBound };

struct Payoff {
  double running = 0.0;   // discounted integral over [0, horizon]
  double tail = 0.0;      // lower estimate of the remainder beyond horizon
  double tail_gap = 0.0;  // certified width of the remainder uncertainty
  double min_state = 0.0;
  double total() const { return running + tail; }
};

// extra < 0 selects cfg.numerics.continuation.
Payoff objective(const ProblemConfig& cfg, const HistoryState& eta, const ControlPath& c,
                 double horizon, TailPolicy tail, double extra = -1.0);

bool comparison_check(const ProblemConfig& cfg, const HistoryState& eta_a,
                      const HistoryState& eta_b, const ControlPath& c_a, const ControlPath& c_b,
                      double horizon);

// columns: t, x, c, discounted_utility_density
void write_trajectory_csv(std::ostream& os, const ProblemConfig& cfg, const Trajectory& tr);

}  // namespace ddeopt
