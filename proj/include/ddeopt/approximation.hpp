#pragma once

#include <string>
#include <vector>

#include "ddeopt/core_model.hpp"
#include "ddeopt/delay_dynamics.hpp"
#include "ddeopt/feedback_synthesis.hpp"
#include "ddeopt/value_function.hpp"

namespace ddeopt {

// M with (1/rho) e^{-rho M} (u1_sup - u1_at_0) = eps / 2, clamped at 0 and
// rounded up to a multiple of grid_step when grid_step > 0.
double epsilon_truncation_time(double rho, double u1_sup, double u1_at_0, double eps,
                               double grid_step = 0.0);

enum class BlowupStrength { Weak, Strong };

struct StateUtilityFamily {
  int n = 1;
  BlowupStrength strength = BlowupStrength::Weak;
  StateUtilitySpec member;  // <= 0, zero on [1/n, inf)
};

// weak: min(0, 1 - 1/(n x)); strong: min(0, 1 - 1/(n x)^2)
StateUtilityFamily build_state_utility_family(int n, BlowupStrength strength);

struct KernelFamily {
  int k = 1;
  KernelSpec member;
  double l1_mass = 0.0;
  double l2_norm = 0.0;  // recorded, not bounded
};

KernelFamily build_kernel_family(int k, double T, int n_hist);

// trapezoid integral of a * f on the closed history grid
double kernel_moment(const KernelSpec& a, double T, const std::function<double(double)>& f);

// y' = f0(y, y(t - T/2)) - c with the exact lagged grid sample
Trajectory pointwise_delay_integrate(const ProblemConfig& cfg, const HistoryState& eta,
                                     const ControlPath& c, double horizon);

ProblemConfig with_pointwise_delay(ProblemConfig cfg);
ProblemConfig with_kernel(ProblemConfig cfg, int k);
ProblemConfig with_state_utility(ProblemConfig cfg, const StateUtilitySpec& u2);

struct GronwallCertificate {
  double t = 0.0;
  double lipschitz = 0.0;  // C_f0 + |r|
  double K = 0.0;
  double u_k = 0.0;
  double h_of_t = 0.0;
  double bound = 0.0;
  double observed_gap = 0.0;

  bool holds(double quad_tol = 1e-6) const { return observed_gap <= bound + quad_tol; }
};

// Compares the kernel-k trajectory of cfg with the pointwise-lag trajectory
// under the same control on [0, t].
GronwallCertificate gronwall_certificate(const ProblemConfig& cfg, int k, const HistoryState& eta,
                                         const ControlPath& c, double t);

struct NuFloor {
  double nu = 0.0;
  double C_M = 0.0;  // measured growth constant, safety factor included
  double j0 = 0.0;
  double rhs = 0.0;  // j0 - (U1_sup + U2_sup)/rho - 1
  double lhs = 0.0;  // nu/(2 C_M) U2(2 nu) e^{-rho (M + 1)}
  int dyadic_exponent = 0;
};

// Largest nu = 2^-j (j >= 1) meeting the three smallness clauses for the
// strong blow-up state utility of cfg.
NuFloor nu_floor(const ProblemConfig& cfg, const HistoryState& eta, double M, double eps);

struct CertifiedGap {
  double reference_value = 0.0;  // estimate of the target value function
  double payoff = 0.0;           // J of the returned control under the target problem
  double gap = 0.0;              // reference - payoff
  double paper_constant = 0.0;   // eps or 3 eps
  std::vector<BudgetItem> budget;
  double budget_total = 0.0;
  bool pass = false;  // payoff >= reference - paper_constant - budget_total
};

struct SweepRow {
  std::string parameter;
  double value = 0.0;  // parameter value (n, k or eps)
  double value_estimate = 0.0;
  double certificate = 0.0;
  double gap = 0.0;
};

struct ApproxOptions {
  int n_cap = 1024;
  int k_cap = 256;
  int stride = 0;  // closed-loop stride; <= 0 uses numerics
  bool synthesize = true;  // false: stop after the parameter choice (tables only)
  std::vector<int> table_params;  // n or k values for the convergence table
};

struct ApproxResult {
  ControlPath control;  // zero beyond horizon
  double horizon = 0.0;  // M_eps
  CertifiedGap gap;
  std::vector<SweepRow> table;
  int n = 0;  // chosen state-utility index, 0 if unused
  int k = 0;  // chosen kernel index, 0 if unused
  double floor = 0.0;  // trajectory floor used to pick n or k
  double target_value = 0.0;  // V of the chosen approximating problem
  NuFloor nu;  // a priori floor; nu.nu == 0 when not computed
  double realized_floor = 0.0;  // min of the returned control's kernel-k trajectory
};

// cfg must have U2 == 0. Picks n with 1/n below the floor of the truncated
// eps/2-optimal control, then closes the loop on the U2^n problem.
ApproxResult construct_eps_optimal_nostate(const ProblemConfig& cfg, const HistoryState& eta,
                                           double eps, const ApproxOptions& opts = {});

// cfg: strong blow-up U2, kernel replaced by the mollified family. The
// target is the pointwise-lag problem.
ApproxResult construct_eps_optimal_pointwise(const ProblemConfig& cfg, const HistoryState& eta,
                                             double eps, const ApproxOptions& opts = {});

// Target is the pointwise-lag problem with U2 == 0; state utility of cfg is
// replaced by the strong family at the chosen n.
ApproxResult construct_eps_optimal_combined(const ProblemConfig& cfg, const HistoryState& eta,
                                            double eps, const ApproxOptions& opts = {});

// columns: parameter, value, value_estimate, certificate, gap
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::string to_text(const CertifiedGap& g);

}  // namespace ddeopt
