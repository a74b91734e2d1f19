#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ddeopt/error.hpp"

namespace ddeopt {

using Vector = Eigen::VectorXd;

struct Numerics {
  int n_hist = 64;          // history samples on [-T, 0)
  int substeps = 1;         // state steps per history step
  int knots = 32;           // control knots for value estimation
  double value_tol = 1e-3;  // reported estimator tolerance
  double value_eps = 1e-3;  // truncation target for automatic value horizons
  double continuation = 2.0;
  int max_iter = 500;
  int feedback_stride = 4;
  double pos_tol_rel = 1e-12;
};

struct DynamicsSpec {
  std::string name;
  std::function<double(double, double)> f0;
  // partial derivatives (f_x, f_y); finite differences are used when empty
  std::function<std::array<double, 2>(double, double)> grad;
  double lipschitz_const = 0.0;
  // concave smooth minorant with kinks rounded at width delta; empty when f0 is smooth
  std::function<DynamicsSpec(double)> smoothed;

  double operator()(double x, double y) const { return f0(x, y); }
  std::array<double, 2> partials(double x, double y) const;
};

struct KernelSpec {
  std::string name;
  std::string family = "custom";  // ramp, uniform, gaussian or custom
  int param = 0;                  // concentration index for gaussian
  Vector samples;  // a on the closed grid -T = xi_0 < ... < xi_N = 0
  double derivative_bound = 0.0;
};

struct UtilitySpec {
  std::string name;
  std::function<double(double)> u;
  std::function<double(double)> u_prime;
  std::function<double(double)> u_second;  // optional
  double u_sup = 0.0;

  double operator()(double c) const { return u(c); }
};

struct StateUtilitySpec {
  std::string name;
  std::function<double(double)> u;
  std::function<double(double)> u_prime;
  double u_sup = 0.0;
  bool zero = false;
  bool nonintegrable_at_zero = false;
  bool strong_blowup = false;
  // concave smooth minorant within delta log 2 of u; empty when u is smooth
  std::function<StateUtilitySpec(double)> smoothed;

  double operator()(double x) const { return u(x); }
};

enum class DelayKind { Distributed, Pointwise };

struct ProblemConfig {
  std::string name;
  double r = 0.0;
  double rho = 1.0;
  double T = 1.0;
  DynamicsSpec dynamics;
  KernelSpec kernel;
  UtilitySpec u1;
  StateUtilitySpec u2;
  DelayKind delay = DelayKind::Distributed;
  Numerics numerics;

  int n_hist() const { return numerics.n_hist; }
  double hist_step() const { return T / numerics.n_hist; }
  double state_step() const { return T / (numerics.n_hist * numerics.substeps); }
  double utility_sup() const { return u1.u_sup + u2.u_sup; }
  double pos_tol(double eta0) const;
  // grid point of xi on the closed history grid
  double node(int j) const { return -T + j * hist_step(); }
};

// Stable hash over every number that determines solver output.
std::uint64_t config_hash(const ProblemConfig& cfg);
std::string config_descriptor(const ProblemConfig& cfg);

struct HistoryState {
  double eta0 = 0.0;
  Vector eta1;  // n_hist samples at xi_0, ..., xi_{N-1}

  static HistoryState constant(int n_hist, double value);
  bool in_h_plus() const { return eta0 > 0.0; }
  bool in_h_plus_plus() const;
  // piecewise-linear value at xi in [-T, 0]
  double at(double xi, double T) const;
};

void check_history(const ProblemConfig& cfg, const HistoryState& eta);

struct HypothesisCheck {
  std::string name;
  std::string scope;  // "base", "closed-loop", "approximation"
  bool passed = true;
  std::string witness;
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;

  bool passed() const;
  bool passed(const std::string& scope) const;
  const HypothesisCheck* find(const std::string& name) const;
  std::vector<std::string> failures() const;
};

ValidationReport validate_config(const ProblemConfig& cfg);

// Catalog building blocks.
DynamicsSpec saturating_dynamics(double alpha, double cap, double beta);
DynamicsSpec smooth_saturating_dynamics(double alpha, double s, double beta);
DynamicsSpec linear_dynamics(double alpha, double beta);

KernelSpec ramp_kernel(double T, int n_hist);
KernelSpec uniform_kernel(double T, int n_hist);
// Gaussian bump at -T/2 with width T/(4k), faded to zero at -T, floored near 0,
// unit trapezoid mass.
KernelSpec mollified_kernel(double T, int n_hist, int k);
KernelSpec kernel_by_family(const std::string& family, double T, int n_hist, int param = 0);

UtilitySpec power_ratio_utility(double gamma);
UtilitySpec linear_utility();
StateUtilitySpec zero_state_utility();
StateUtilitySpec inverse_state_utility(double n);
StateUtilitySpec inverse_square_state_utility(double n);

std::vector<ProblemConfig> builtin_catalog(const Numerics& numerics = {});
ProblemConfig preset(const std::string& name, const Numerics& numerics = {});
// Rebuilds the kernel samples of a preset-derived config after the grid changes.
void regrid(ProblemConfig& cfg, int n_hist, int substeps = 1);

}  // namespace ddeopt
