#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ddeopt/core_model.hpp"
#include "ddeopt/delay_dynamics.hpp"
#include "ddeopt/detail/tape.hpp"

namespace ddeopt {

struct DomainProbe {
  double g_value = 0.0;  // min over [0, T] of the zero-control trajectory
  bool in_domain = false;
};

DomainProbe domain_probe(const ProblemConfig& cfg, const HistoryState& eta);

// Largest eta0 with g(eta0, eta1) <= pos_tol, found by bisection on [lo, hi].
double domain_boundary(const ProblemConfig& cfg, const Vector& eta1, double hi = 1.0);

// Piecewise-constant control on [0, M]: knot k holds on steps [bounds[k], bounds[k+1]).
struct KnotLayout {
  double dt = 0.0;
  std::vector<int> bounds;

  int count() const { return static_cast<int>(bounds.size()) - 1; }
  int steps() const { return bounds.empty() ? 0 : bounds.back(); }
  double horizon() const { return dt * steps(); }
  double start_time(int k) const { return dt * bounds[k]; }
};

// Geometric spacing, dense near t = 0; every interval is at least one step.
KnotLayout make_knots(const ProblemConfig& cfg, double horizon, int count);
ControlPath knots_to_path(const KnotLayout& layout, const Vector& knots);
// Averages a path onto the knot intervals (used for warm starts).
Vector path_to_knots(const KnotLayout& layout, const ControlPath& c);

// Discretized payoff of a knot vector with zero control after M and a
// remainder estimate after M + continuation. Evaluation is exact for the
// scheme; gradients come from the reverse-mode tape.
class TranscribedPayoff {
 public:
  TranscribedPayoff(const ProblemConfig& cfg, const HistoryState& eta, KnotLayout layout,
                    double continuation);

  double value(const Vector& knots) const;  // -inf when inadmissible
  // value plus mu * sum_i dt e^{-rho t_i} log x_i; the barrier keeps iterates off
  // the state constraint when U2 does not
  double objective(const Vector& knots) const;
  // gradient of objective(); d_eta0 receives its derivative along (1, 0)
  double value_and_gradient(const Vector& knots, Vector& grad, double* d_eta0 = nullptr);
  void set_barrier(double mu) { mu_ = mu; }
  double barrier() const { return mu_; }
  // smallest state over [0, M + continuation]
  double floor(const Vector& knots) const;
  // width between the remainder estimate and its upper bound
  double remainder_gap(const Vector& knots) const;

  const KnotLayout& layout() const { return layout_; }
  int total_steps() const { return layout_.steps() + extra_steps_; }

 private:
  double evaluate(const Vector& knots, double mu) const;

  const ProblemConfig& cfg_;
  HistoryState eta_;
  KnotLayout layout_;
  int extra_steps_ = 0;
  double mu_ = 0.0;
  std::vector<int> knot_of_step_;
  ad::Tape tape_;
};

struct ValueOptions {
  double horizon = 0.0;  // <= 0 selects the epsilon truncation time of numerics.value_eps
  int knots = 0;         // <= 0 selects numerics.knots
  std::optional<Vector> warm_start;
  bool envelope = true;
  double grad_tol = 1e-10;
};

struct ValueEstimate {
  double value = 0.0;         // payoff of the returned control under the true model
  double smooth_value = 0.0;  // optimum of the smoothed surrogate; slopes difference this
  double v_eta0 = 0.0;   // envelope derivative along (1, 0)
  double horizon = 0.0;  // M
  double tail_gap = 0.0;
  int solver_iters = 0;
  double bellman_residual = 0.0;  // final projected gradient
  bool in_domain = true;
  bool converged = false;
  double floor = 0.0;  // smallest state of the optimal transcribed trajectory
  double tolerance = 0.0;
  KnotLayout layout;
  Vector knots;

  ControlPath control() const { return knots_to_path(layout, knots); }
};

ValueEstimate estimate_value(const ProblemConfig& cfg, const HistoryState& eta,
                             const ValueOptions& opts = {});

// Central difference of V along (1, 0); h <= 0 selects 1e-3 (1 + eta0).
double partial_eta0(const ProblemConfig& cfg, const HistoryState& eta, double h = 0.0,
                    const ValueOptions& opts = {});

struct SlopeEstimate {
  double central = 0.0, forward = 0.0, backward = 0.0;
  double h = 0.0;
  ValueEstimate center, plus, minus;
};

SlopeEstimate slope_eta0(const ProblemConfig& cfg, const HistoryState& eta, double h = 0.0,
                         const ValueOptions& opts = {});

struct PropertyRow {
  std::string kind;  // concavity, monotonicity, bound, continuity
  double lhs = 0.0, rhs = 0.0;
  bool passed = true;
};

struct PropertyReport {
  int concavity_checks = 0, concavity_violations = 0;
  int monotone_checks = 0, monotone_violations = 0;
  int bound_checks = 0, bound_violations = 0;
  double continuity_modulus = 0.0;  // max |V - V'| / |eta - eta'|_{-1} on nearby pairs
  double tol_num = 0.0;
  std::vector<PropertyRow> rows;

  bool passed() const {
    return concavity_violations == 0 && monotone_violations == 0 && bound_violations == 0;
  }
};

PropertyReport property_scan(const ProblemConfig& cfg, int n_samples, std::uint64_t seed = 1,
                             int workers = 1);

// Random in-domain state with nonnegative history.
HistoryState sample_state(const ProblemConfig& cfg, std::uint64_t seed, double lo = 0.3,
                          double hi = 3.0);

struct BlowupRow {
  double eta0 = 0.0, value = 0.0, v_eta0 = 0.0, central = 0.0;
};

struct BlowupScan {
  double boundary = 0.0;
  std::vector<BlowupRow> rows;
  bool probe_flips_once = true;
};

// Walks eta0 geometrically from boundary + start_gap down to boundary + end_gap.
BlowupScan boundary_blowup_scan(const ProblemConfig& cfg, const Vector& eta1_fixed, int steps,
                                double start_gap = 1.0, double end_gap = 1e-2);

}  // namespace ddeopt
