#include "ddeopt/delay_dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "ddeopt/detail/control_grid.hpp"
#include "ddeopt/detail/scheme.hpp"
#include "ddeopt/parallel.hpp"

namespace ddeopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Trajectory to_trajectory(const ProblemConfig& cfg, const detail::Scheme<double>& sch,
                         const std::vector<double>& controls, double eta0) {
  Trajectory tr;
  tr.dt = sch.dt();
  tr.start = -cfg.T;
  tr.history_points = sch.history_points();
  tr.values = Eigen::Map<const Vector>(sch.x().data(), static_cast<Eigen::Index>(sch.x().size()));
  tr.controls = Eigen::Map<const Vector>(controls.data(), static_cast<Eigen::Index>(controls.size()));
  tr.min_value = detail::min_state(sch, 0, sch.steps());
  tr.admissible = tr.min_value > cfg.pos_tol(eta0);
  return tr;
}

}  // namespace

ControlPath ControlPath::constant(double dt, int steps, double c) {
  ControlPath p;
  p.dt = dt;
  p.values = Vector::Constant(steps, c);
  return p;
}

double ControlPath::at(double t) const {
  if (t < 0.0 || values.size() == 0) return 0.0;
  const long j = static_cast<long>(std::floor(t / dt));
  return j < values.size() ? values[j] : 0.0;
}

HistoryState Trajectory::window(const ProblemConfig& cfg, int i) const {
  const int N = cfg.numerics.n_hist, m = cfg.numerics.substeps;
  HistoryState w;
  const int k = history_points + i;
  w.eta0 = values[k];
  w.eta1.resize(N);
  for (int j = 0; j < N; ++j) w.eta1[j] = values[k + (j - N) * m];
  return w;
}

Trajectory integrate(const ProblemConfig& cfg, const HistoryState& eta, const ControlPath& c,
                     double horizon) {
  check_history(cfg, eta);
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  const int steps = detail::step_count(cfg, horizon);
  const int ratio = detail::control_ratio(cfg, c);
  detail::Scheme<double> sch(cfg, detail::make_stencil(cfg));
  sch.start(eta.eta1, eta.eta0, steps);
  std::vector<double> controls(steps);
  for (int i = 0; i < steps; ++i) {
    controls[i] = detail::control_at_step(c, ratio, i);
    sch.step(controls[i]);
  }
  return to_trajectory(cfg, sch, controls, eta.eta0);
}

std::vector<Trajectory> integrate_batch(const ProblemConfig& cfg,
                                        const std::vector<HistoryState>& etas,
                                        const std::vector<ControlPath>& controls, double horizon,
                                        int workers) {
  if (etas.size() != controls.size())
    throw Error(ErrorCode::InvalidArgument, "batch sizes differ");
  std::vector<Trajectory> out(etas.size());
  parallel_for(static_cast<int>(etas.size()), workers,
               [&](int i) { out[i] = integrate(cfg, etas[i], controls[i], horizon); });
  return out;
}

Payoff objective(const ProblemConfig& cfg, const HistoryState& eta, const ControlPath& c,
                 double horizon, TailPolicy tail, double extra) {
  check_history(cfg, eta);
  const int steps = detail::step_count(cfg, horizon);
  const int ratio = detail::control_ratio(cfg, c);
  if (extra < 0.0) extra = cfg.numerics.continuation;
  const int extra_steps = tail == TailPolicy::ZeroControlContinuation ? detail::step_count(cfg, extra) : 0;

  detail::Scheme<double> sch(cfg, detail::make_stencil(cfg));
  sch.start(eta.eta1, eta.eta0, steps + extra_steps);
  for (int i = 0; i < steps; ++i) sch.step(detail::control_at_step(c, ratio, i));
  const double tol = cfg.pos_tol(eta.eta0);
  Payoff p;
  p.min_state = detail::min_state(sch, 0, steps);
  if (!(p.min_state > tol))
    throw Error(ErrorCode::Inadmissible, "state reaches " + std::to_string(p.min_state) +
                                             " on [0, " + std::to_string(horizon) + "]");
  ad::LinComb<double> acc;
  acc.reset();
  detail::accumulate_payoff(cfg, sch, 0, steps,
                            [&](int i) { return detail::control_at_step(c, ratio, i); }, acc);
  p.running = acc.result();

  const double sup = cfg.utility_sup();
  if (tail == TailPolicy::UpperBound) {
    p.tail = std::exp(-cfg.rho * horizon) * sup / cfg.rho;
    p.tail_gap = p.tail;
    return p;
  }
  for (int i = 0; i < extra_steps; ++i) sch.step(0.0);
  const double cont_min = detail::min_state(sch, steps, steps + extra_steps);
  if (!(cont_min > tol)) {
    p.tail = -kInf;
    p.tail_gap = kInf;
    return p;
  }
  acc.reset();
  detail::accumulate_payoff(cfg, sch, steps, steps + extra_steps, [](int) { return 0.0; }, acc);
  const double end = horizon + extra;
  const double x_end = sch.at_step(steps + extra_steps);
  const double rest = cfg.u1.u(0.0) + cfg.u2.u(x_end);
  const double disc = std::exp(-cfg.rho * end) / cfg.rho;
  p.tail = acc.result() + disc * rest;
  p.tail_gap = disc * std::max(0.0, sup - rest);
  return p;
}

bool comparison_check(const ProblemConfig& cfg, const HistoryState& eta_a,
                      const HistoryState& eta_b, const ControlPath& c_a, const ControlPath& c_b,
                      double horizon) {
  const Trajectory a = integrate(cfg, eta_a, c_a, horizon);
  const Trajectory b = integrate(cfg, eta_b, c_b, horizon);
  const double scale = 1.0 + std::max(a.values.cwiseAbs().maxCoeff(), b.values.cwiseAbs().maxCoeff());
  const double tol = 1e-8 * scale;
  for (Eigen::Index k = 0; k < a.values.size(); ++k)
    if (a.values[k] > b.values[k] + tol) return false;
  return true;
}

void write_trajectory_csv(std::ostream& os, const ProblemConfig& cfg, const Trajectory& tr) {
  char buf[160];
  os << "t,x,c,discounted_utility_density\n";
  for (Eigen::Index k = 0; k < tr.values.size(); ++k) {
    const double t = tr.time(static_cast<int>(k));
    if (k < tr.history_points) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,,\n", t, tr.values[k]);
    } else {
      const Eigen::Index i = k - tr.history_points;
      const double c = i < tr.controls.size() ? tr.controls[i] : 0.0;
      const double x = tr.values[k];
      const double dens = std::exp(-cfg.rho * t) * (cfg.u1.u(c) + (x > 0.0 ? cfg.u2.u(x) : -kInf));
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", t, x, c, dens);
    }
    os << buf;
  }
}

}  // namespace ddeopt
