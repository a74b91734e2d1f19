#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ddeopt/core_model.hpp"
#include "ddeopt/delay_dynamics.hpp"
#include "ddeopt/value_function.hpp"

namespace ddeopt {

struct CacheStats {
  std::uint64_t hits = 0, misses = 0, disk_loaded = 0, evaluations = 0;
};

struct FeedbackOptions {
  double h = 0.0;         // difference step of V_eta0; <= 0 selects the default
  double scale = 1.0;     // multiplies every price (ablation)
  std::string cache_dir;  // empty: DDEOPT_CACHE_DIR, if set
  ValueOptions value;
};

// Shadow-price oracle eta -> V_eta0(eta). The live oracle runs slope_eta0 with a
// warm-start chain and memoizes by (config hash, exact bits of eta). Safe for
// concurrent readers; one writer at a time.
class FeedbackPolicy {
 public:
  static FeedbackPolicy live(const ProblemConfig& cfg, FeedbackOptions opts = {});
  static FeedbackPolicy constant_price(double price);

  FeedbackPolicy(FeedbackPolicy&&) noexcept;
  FeedbackPolicy& operator=(FeedbackPolicy&&) noexcept;
  ~FeedbackPolicy();

  // scaled V_eta0 at eta; throws OutOfDomain or GradientFailure
  double price(const ProblemConfig& cfg, const HistoryState& eta);
  CacheStats stats() const;
  // writes new entries to the disk cache, if one is configured
  void flush() const;
  bool is_constant() const;
  double scale() const;

 private:
  struct Impl;
  explicit FeedbackPolicy(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

double feedback_control(FeedbackPolicy& policy, const ProblemConfig& cfg, const HistoryState& eta);

struct ClosedLoop {
  Trajectory trajectory;
  ControlPath control;
  std::vector<double> prices;   // price used on each step
  std::vector<double> schedule_error;  // |predicted - realized price| at block ends
  std::vector<double> realized_prices;  // price at the realized window of each block start
  int stride = 1;
};

// Explicit feedback integration. Prices are evaluated at the realized window
// state every `stride` steps; in between they are interpolated linearly towards
// the price at the predicted block end. stride <= 0 selects numerics.feedback_stride.
ClosedLoop closed_loop_solve(FeedbackPolicy& policy, const ProblemConfig& cfg,
                             const HistoryState& eta, double horizon, int stride = 0);

// Discounted Hamiltonian deficit H(p) - (U1(c) - p c) of the realized control,
// with p interpolated between the realized block-start prices.
double hamiltonian_deficit(const ProblemConfig& cfg, const ClosedLoop& loop);

struct BudgetItem {
  std::string name;
  double value = 0.0;
};

struct VerificationReport {
  double value_estimate = 0.0;   // V(eta)
  double feedback_payoff = 0.0;  // J(eta; c*)
  double gap = 0.0;              // V - J
  double budget = 0.0;
  std::vector<BudgetItem> items;
  double estimator_tolerance = 0.0;
  double horizon = 0.0;
  double min_state = 0.0;
  bool upper_ok = false;  // J <= V + estimator tolerance
  bool pass = false;      // J >= V - budget
};

VerificationReport verify_optimality(FeedbackPolicy& policy, const ProblemConfig& cfg,
                                     const HistoryState& eta, double horizon, int stride = 0);

// Same check for a control computed elsewhere (e.g. by closed_loop_solve).
VerificationReport verify_control(const ProblemConfig& cfg, const HistoryState& eta,
                                  const ClosedLoop& loop, double horizon);

// "key: value" lines, budget items indented under "budget"
std::string to_text(const VerificationReport& rep);

}  // namespace ddeopt
