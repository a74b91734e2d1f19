#pragma once

// Method-of-steps RK4 for x'(t) = r x + f0(x, sum_j w_j x(t + xi_j)) - c(t),
// templated on the scalar so that the same code runs on doubles and on tape
// variables. The delay quadrature is fixed on the history grid; in-step stage
// values at half steps use piecewise-linear history or a cubic Hermite
// midpoint on computed cells.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ddeopt/core_model.hpp"
#include "ddeopt/detail/tape.hpp"

namespace ddeopt::detail {

using ad::LinComb;
using ad::value_of;
using ad::Var;

struct Stencil {
  std::vector<int> offsets;  // lag in state steps, all <= -1
  std::vector<double> weights;
  double w_now = 0.0;  // weight on x(t) itself
};

inline int step_count(const ProblemConfig& cfg, double horizon) {
  const double dt = cfg.state_step();
  const double s = horizon / dt;
  const long n = std::lround(s);
  if (horizon < 0.0 || std::abs(s - static_cast<double>(n)) > 1e-7 * std::max(1.0, s))
    throw Error(ErrorCode::ConfigMismatch,
                "horizon " + std::to_string(horizon) + " is not a multiple of the state step");
  return static_cast<int>(n);
}

inline Stencil make_stencil(const ProblemConfig& cfg) {
  const int N = cfg.numerics.n_hist, m = cfg.numerics.substeps;
  if (N < 2 || m < 1) throw Error(ErrorCode::ConfigMismatch, "grid needs n_hist >= 2, substeps >= 1");
  Stencil st;
  if (cfg.delay == DelayKind::Pointwise) {
    if (N % 2 != 0)
      throw Error(ErrorCode::ConfigMismatch, "pointwise lag T/2 is off-grid for odd n_hist");
    st.offsets.push_back(-(N / 2) * m);
    st.weights.push_back(1.0);
    return st;
  }
  const Vector& a = cfg.kernel.samples;
  if (a.size() != N + 1)
    throw Error(ErrorCode::ConfigMismatch, "kernel has " + std::to_string(a.size()) +
                                               " samples, grid expects " + std::to_string(N + 1));
  const double h = cfg.hist_step();
  for (int j = 0; j < N; ++j) {
    const double w = (j == 0 ? 0.5 : 1.0) * h * a[j];
    if (w == 0.0) continue;
    st.offsets.push_back((j - N) * m);
    st.weights.push_back(w);
  }
  st.w_now = 0.5 * h * a[N];
  return st;
}

template <class S>
S eval_f0(const DynamicsSpec& d, const S& x, const S& y);

template <>
inline double eval_f0<double>(const DynamicsSpec& d, const double& x, const double& y) {
  return d.f0(std::max(x, 0.0), y);
}

template <>
inline Var eval_f0<Var>(const DynamicsSpec& d, const Var& x, const Var& y) {
  const double xp = std::max(x.v, 0.0);
  const double v = d.f0(xp, y.v);
  auto p = d.partials(xp, y.v);
  if (x.v < 0.0) p[0] = 0.0;
  return ad::binary(v, x, p[0], y, p[1]);
}

template <class S>
class Scheme {
 public:
  Scheme(const ProblemConfig& cfg, Stencil st)
      : cfg_(cfg), st_(std::move(st)), dt_(cfg.state_step()),
        P_(cfg.numerics.n_hist * cfg.numerics.substeps) {}

  void start(const Vector& eta1, const S& eta0, int reserve_steps = 0) {
    const int N = cfg_.numerics.n_hist, m = cfg_.numerics.substeps;
    x_.clear();
    mid_.clear();
    dR_.clear();
    dL_.clear();
    x_.reserve(P_ + reserve_steps + 1);
    mid_.reserve(P_ + reserve_steps);
    for (int j = 0; j < N; ++j) {
      for (int s = 0; s < m; ++s) {
        const double w = static_cast<double>(s) / m;
        if (w == 0.0)
          x_.push_back(S(eta1[j]));
        else if (j + 1 < N)
          x_.push_back(S((1.0 - w) * eta1[j] + w * eta1[j + 1]));
        else
          x_.push_back((1.0 - w) * eta1[j] + w * eta0);
      }
    }
    x_.push_back(eta0);
    for (int a = 0; a < P_; ++a) mid_.push_back(0.5 * (x_[a] + x_[a + 1]));
    have_past_ = false;
  }

  // Advances one state step under the constant control c.
  void step(const S& c) {
    const int k = static_cast<int>(x_.size()) - 1;
    const std::size_t J = st_.offsets.size();
    if (!have_past_) {
      acc_.reset();
      for (std::size_t j = 0; j < J; ++j) acc_.add(st_.weights[j], x_[k + st_.offsets[j]]);
      y_past_ = acc_.result();
      have_past_ = true;
    }
    acc_.reset();
    for (std::size_t j = 0; j < J; ++j) acc_.add(st_.weights[j], mid_[k + st_.offsets[j]]);
    const S y_half = acc_.result();
    acc_.reset();
    for (std::size_t j = 0; j < J; ++j) acc_.add(st_.weights[j], x_[k + 1 + st_.offsets[j]]);
    const S y_one = acc_.result();

    const S& x0 = x_[k];
    const double h = dt_;
    const S k1 = rhs(x0, y_past_, c);
    const S x2 = x0 + (0.5 * h) * k1;
    const S k2 = rhs(x2, y_half, c);
    const S x3 = x0 + (0.5 * h) * k2;
    const S k3 = rhs(x3, y_half, c);
    const S x4 = x0 + h * k3;
    const S k4 = rhs(x4, y_one, c);
    acc_.reset();
    acc_.add(1.0, x0);
    acc_.add(h / 6.0, k1);
    acc_.add(h / 3.0, k2);
    acc_.add(h / 3.0, k3);
    acc_.add(h / 6.0, k4);
    const S x1 = acc_.result();
    if (!std::isfinite(value_of(x1)))
      throw Error(ErrorCode::NonFiniteState,
                  "non-finite state at t=" + std::to_string((k + 1 - P_) * h));
    const S dl = rhs(x1, y_one, c);
    acc_.reset();
    acc_.add(0.5, x0);
    acc_.add(0.5, x1);
    acc_.add(h / 8.0, k1);
    acc_.add(-h / 8.0, dl);
    mid_.push_back(acc_.result());
    x_.push_back(x1);
    dR_.push_back(k1);
    dL_.push_back(dl);
    y_past_ = y_one;
  }

  // Drops steps beyond `steps` so that integration can resume from there.
  void truncate(int steps) {
    const int keep = P_ + steps;
    x_.resize(keep + 1);
    mid_.resize(keep);
    dR_.resize(steps);
    dL_.resize(steps);
    if (steps == 0) {
      have_past_ = false;
    } else {
      const int k = keep;
      acc_.reset();
      for (std::size_t j = 0; j < st_.offsets.size(); ++j)
        acc_.add(st_.weights[j], x_[k + st_.offsets[j]]);
      y_past_ = acc_.result();
      have_past_ = true;
    }
  }

  int steps() const { return static_cast<int>(x_.size()) - 1 - P_; }
  int history_points() const { return P_; }
  double dt() const { return dt_; }
  const std::vector<S>& x() const { return x_; }
  const S& at_step(int i) const { return x_[P_ + i]; }
  const S& derivative_right(int i) const { return dR_[i]; }

  // window state at step i as (eta0, eta1 samples on the history grid)
  HistoryState window(int i) const {
    const int N = cfg_.numerics.n_hist, m = cfg_.numerics.substeps;
    HistoryState w;
    const int k = P_ + i;
    w.eta0 = value_of(x_[k]);
    w.eta1.resize(N);
    for (int j = 0; j < N; ++j) w.eta1[j] = value_of(x_[k + (j - N) * m]);
    return w;
  }

 private:
  S rhs(const S& x, const S& ypast, const S& c) const {
    const S y = (st_.w_now == 0.0) ? ypast : ypast + st_.w_now * x;
    return cfg_.r * x + eval_f0<S>(cfg_.dynamics, x, y) - c;
  }

  const ProblemConfig& cfg_;
  Stencil st_;
  double dt_;
  int P_;
  std::vector<S> x_, mid_, dR_, dL_;
  S y_past_{};
  bool have_past_ = false;
  LinComb<S> acc_;
};

template <class S>
S eval_u1(const UtilitySpec& u, const S& c);

template <>
inline double eval_u1<double>(const UtilitySpec& u, const double& c) {
  return u.u(c);
}

template <>
inline Var eval_u1<Var>(const UtilitySpec& u, const Var& c) {
  double d = u.u_prime(c.v);
  if (!(d < 1e10)) d = 1e10;  // U1'(0+) is infinite; cap the recorded partial
  return ad::unary(u.u(c.v), c, d);
}

template <class S>
S eval_u2(const StateUtilitySpec& u, const S& x);

template <>
inline double eval_u2<double>(const StateUtilitySpec& u, const double& x) {
  return u.u(x);
}

template <>
inline Var eval_u2<Var>(const StateUtilitySpec& u, const Var& x) {
  return ad::unary(u.u(x.v), x, u.u_prime(x.v));
}

// Discount weights of one step: exact for the piecewise-constant U1 part,
// exponentially fitted trapezoid for the piecewise-linear U2 part.
struct StepWeights {
  double u1 = 0.0, left = 0.0, right = 0.0;
};

inline StepWeights step_weights(double rho, double dt) {
  const double q = rho * dt;
  const double e = std::exp(-q);
  StepWeights w;
  w.u1 = -std::expm1(-q) / rho;
  if (q < 1e-4) {
    w.left = dt * (0.5 - q / 6.0 + q * q / 24.0);
    w.right = dt * (0.5 - q / 3.0 + q * q / 8.0);
  } else {
    w.left = (q - 1.0 + e) / (rho * q);
    w.right = (1.0 - e - q * e) / (rho * q);
  }
  return w;
}

// Discounted running payoff over steps [first, last) of a computed scheme.
// Accumulates into `acc`; control(i) supplies the control of step i.
template <class S, class Control>
void accumulate_payoff(const ProblemConfig& cfg, const Scheme<S>& sch, int first, int last,
                       Control&& control, LinComb<S>& acc) {
  const double dt = sch.dt();
  const StepWeights w = step_weights(cfg.rho, dt);
  const bool with_u2 = !cfg.u2.zero;
  S u2_left = with_u2 ? eval_u2<S>(cfg.u2, sch.at_step(first)) : S(0.0);
  for (int i = first; i < last; ++i) {
    const double disc = std::exp(-cfg.rho * i * dt);
    acc.add(disc * w.u1, eval_u1<S>(cfg.u1, control(i)));
    if (with_u2) {
      const S u2_right = eval_u2<S>(cfg.u2, sch.at_step(i + 1));
      acc.add(disc * w.left, u2_left);
      acc.add(disc * w.right, u2_right);
      u2_left = u2_right;
    }
  }
}

// Smallest state over steps [first, last] (inclusive of both ends).
template <class S>
double min_state(const Scheme<S>& sch, int first, int last) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = first; i <= last; ++i) m = std::min(m, value_of(sch.at_step(i)));
  return m;
}

}  // namespace ddeopt::detail
