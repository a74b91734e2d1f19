#include "ddeopt/value_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ddeopt/approximation.hpp"
#include "ddeopt/detail/scheme.hpp"
#include "ddeopt/hilbert_embedding.hpp"
#include "ddeopt/optimizer.hpp"
#include "ddeopt/parallel.hpp"

namespace ddeopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int steps_up(const ProblemConfig& cfg, double t) {
  return static_cast<int>(std::ceil(t / cfg.state_step() - 1e-9));
}

HistoryState shifted(const HistoryState& eta, double d) {
  HistoryState out = eta;
  out.eta0 += d;
  return out;
}

}  // namespace

DomainProbe domain_probe(const ProblemConfig& cfg, const HistoryState& eta) {
  check_history(cfg, eta);
  detail::Scheme<double> sch(cfg, detail::make_stencil(cfg));
  const int S = detail::step_count(cfg, cfg.T);
  sch.start(eta.eta1, eta.eta0, S);
  for (int i = 0; i < S; ++i) sch.step(0.0);
  DomainProbe p;
  p.g_value = detail::min_state(sch, 0, S);
  p.in_domain = p.g_value > cfg.pos_tol(eta.eta0);
  return p;
}

double domain_boundary(const ProblemConfig& cfg, const Vector& eta1, double hi) {
  HistoryState eta;
  eta.eta1 = eta1;
  auto inside = [&](double e0) {
    eta.eta0 = e0;
    return domain_probe(cfg, eta).in_domain;
  };
  hi = std::max(hi, 1e-6);
  for (int i = 0; !inside(hi); ++i) {
    if (i > 60) throw Error(ErrorCode::OutOfDomain, "no admissible eta0 found for this history");
    hi *= 2.0;
  }
  double lo = 0.0;
  if (inside(lo)) return 0.0;
  for (int i = 0; i < 80 && hi - lo > 1e-14 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? hi : lo) = mid;
  }
  return lo;
}

KnotLayout make_knots(const ProblemConfig& cfg, double horizon, int count) {
  const int S = detail::step_count(cfg, horizon);
  if (S < 1 || count < 1) throw Error(ErrorCode::InvalidArgument, "need a positive horizon and knot count");
  const int K = std::min(count, S);
  KnotLayout L;
  L.dt = cfg.state_step();
  L.bounds.resize(K + 1);
  const double lam = 3.0;
  for (int i = 0; i <= K; ++i)
    L.bounds[i] = static_cast<int>(std::lround(S * std::expm1(lam * i / K) / std::expm1(lam)));
  L.bounds[0] = 0;
  L.bounds[K] = S;
  for (int i = 1; i <= K; ++i) L.bounds[i] = std::max(L.bounds[i], L.bounds[i - 1] + 1);
  for (int i = K - 1; i >= 1; --i) L.bounds[i] = std::min(L.bounds[i], L.bounds[i + 1] - 1);
  return L;
}

ControlPath knots_to_path(const KnotLayout& layout, const Vector& knots) {
  if (knots.size() != layout.count()) throw Error(ErrorCode::InvalidArgument, "knot count mismatch");
  ControlPath p;
  p.dt = layout.dt;
  p.values.resize(layout.steps());
  for (int k = 0; k < layout.count(); ++k)
    for (int i = layout.bounds[k]; i < layout.bounds[k + 1]; ++i) p.values[i] = knots[k];
  return p;
}

Vector path_to_knots(const KnotLayout& layout, const ControlPath& c) {
  Vector out(layout.count());
  for (int k = 0; k < layout.count(); ++k) {
    double s = 0.0;
    for (int i = layout.bounds[k]; i < layout.bounds[k + 1]; ++i) s += c.at((i + 0.5) * layout.dt);
    out[k] = s / (layout.bounds[k + 1] - layout.bounds[k]);
  }
  return out;
}

TranscribedPayoff::TranscribedPayoff(const ProblemConfig& cfg, const HistoryState& eta,
                                     KnotLayout layout, double continuation)
    : cfg_(cfg), eta_(eta), layout_(std::move(layout)) {
  check_history(cfg, eta);
  extra_steps_ = continuation > 0.0 ? steps_up(cfg, continuation) : 0;
  knot_of_step_.resize(layout_.steps());
  for (int k = 0; k < layout_.count(); ++k)
    for (int i = layout_.bounds[k]; i < layout_.bounds[k + 1]; ++i) knot_of_step_[i] = k;
}

double TranscribedPayoff::value(const Vector& knots) const { return evaluate(knots, 0.0); }

double TranscribedPayoff::objective(const Vector& knots) const { return evaluate(knots, mu_); }

double TranscribedPayoff::evaluate(const Vector& knots, double mu) const {
  const int S = layout_.steps(), E = extra_steps_;
  const double tol = cfg_.pos_tol(eta_.eta0);
  detail::Scheme<double> sch(cfg_, detail::make_stencil(cfg_));
  sch.start(eta_.eta1, eta_.eta0, S + E);
  for (int i = 0; i < S + E; ++i) {
    sch.step(i < S ? knots[knot_of_step_[i]] : 0.0);
    if (!(sch.at_step(i + 1) > tol)) return -kInf;
  }
  ad::LinComb<double> acc;
  acc.reset();
  detail::accumulate_payoff(cfg_, sch, 0, S + E,
                            [&](int i) { return i < S ? knots[knot_of_step_[i]] : 0.0; }, acc);
  const double dt = sch.dt();
  if (mu > 0.0)
    for (int i = 1; i <= S + E; ++i) acc.add(mu * dt * std::exp(-cfg_.rho * i * dt), std::log(sch.at_step(i)));
  const double disc = std::exp(-cfg_.rho * (S + E) * dt) / cfg_.rho;
  return acc.result() + disc * (cfg_.u1.u(0.0) + cfg_.u2.u(sch.at_step(S + E)));
}

double TranscribedPayoff::value_and_gradient(const Vector& knots, Vector& grad, double* d_eta0) {
  using detail::Var;
  const int S = layout_.steps(), E = extra_steps_, K = layout_.count();
  const double tol = cfg_.pos_tol(eta_.eta0);
  grad = Vector::Zero(K);
  tape_.clear();
  ad::TapeScope scope(tape_);
  std::vector<Var> c(K);
  for (int k = 0; k < K; ++k) c[k] = Var::independent(knots[k]);
  const Var e0 = Var::independent(eta_.eta0);
  detail::Scheme<Var> sch(cfg_, detail::make_stencil(cfg_));
  sch.start(eta_.eta1, e0, S + E);
  const Var zero(0.0);
  for (int i = 0; i < S + E; ++i) {
    sch.step(i < S ? c[knot_of_step_[i]] : zero);
    if (!(sch.at_step(i + 1).v > tol)) {
      if (d_eta0) *d_eta0 = 0.0;
      return -kInf;
    }
  }
  ad::LinComb<Var> acc;
  acc.reset();
  detail::accumulate_payoff(cfg_, sch, 0, S + E,
                            [&](int i) { return i < S ? c[knot_of_step_[i]] : zero; }, acc);
  const double dt = sch.dt();
  if (mu_ > 0.0)
    for (int i = 1; i <= S + E; ++i) {
      const Var& x = sch.at_step(i);
      acc.add(mu_ * dt * std::exp(-cfg_.rho * i * dt), ad::unary(std::log(x.v), x, 1.0 / x.v));
    }
  const double disc = std::exp(-cfg_.rho * (S + E) * dt) / cfg_.rho;
  acc.add(disc, Var(cfg_.u1.u(0.0)));
  if (!cfg_.u2.zero) acc.add(disc, detail::eval_u2<Var>(cfg_.u2, sch.at_step(S + E)));
  const Var J = acc.result();
  const std::vector<double> bar = tape_.adjoint(J.id);
  for (int k = 0; k < K; ++k) grad[k] = bar[c[k].id];
  if (d_eta0) *d_eta0 = bar[e0.id];
  return J.v;
}

double TranscribedPayoff::floor(const Vector& knots) const {
  const int S = layout_.steps(), E = extra_steps_;
  detail::Scheme<double> sch(cfg_, detail::make_stencil(cfg_));
  sch.start(eta_.eta1, eta_.eta0, S + E);
  for (int i = 0; i < S + E; ++i) sch.step(i < S ? knots[knot_of_step_[i]] : 0.0);
  return detail::min_state(sch, 0, S + E);
}

double TranscribedPayoff::remainder_gap(const Vector& knots) const {
  const int S = layout_.steps(), E = extra_steps_;
  detail::Scheme<double> sch(cfg_, detail::make_stencil(cfg_));
  sch.start(eta_.eta1, eta_.eta0, S + E);
  for (int i = 0; i < S + E; ++i) sch.step(i < S ? knots[knot_of_step_[i]] : 0.0);
  const double x_end = sch.at_step(S + E);
  if (!(x_end > 0.0)) return kInf;
  const double disc = std::exp(-cfg_.rho * (S + E) * sch.dt()) / cfg_.rho;
  return disc * std::max(0.0, cfg_.utility_sup() - cfg_.u1.u(0.0) - cfg_.u2.u(x_end));
}

ValueEstimate estimate_value(const ProblemConfig& cfg, const HistoryState& eta,
                             const ValueOptions& opts) {
  ValueEstimate est;
  const DomainProbe probe = domain_probe(cfg, eta);
  const double u1_0 = cfg.u1.u(0.0);
  double M = opts.horizon;
  if (M > 0.0)
    M = steps_up(cfg, M) * cfg.state_step();
  else
    M = epsilon_truncation_time(cfg.rho, cfg.u1.u_sup, u1_0, cfg.numerics.value_eps, cfg.state_step());
  M = std::max(M, cfg.state_step());
  est.horizon = M;
  est.tolerance = cfg.numerics.value_tol;
  if (!probe.in_domain) {
    est.value = -kInf;
    est.in_domain = false;
    est.floor = probe.g_value;
    return est;
  }
  est.layout = make_knots(cfg, M, opts.knots > 0 ? opts.knots : cfg.numerics.knots);
  const int K = est.layout.count();
  TranscribedPayoff tp(cfg, eta, est.layout, cfg.numerics.continuation);

  Vector x0;
  if (opts.warm_start && opts.warm_start->size() == K) {
    x0 = opts.warm_start->cwiseMax(0.0);
    if (!std::isfinite(tp.value(x0))) x0.resize(0);
  }
  if (x0.size() == 0) {
    double c0 = std::clamp(0.2 * eta.eta0, 1e-3, 10.0);
    x0 = Vector::Constant(K, c0);
    for (int i = 0; i < 40 && !std::isfinite(tp.value(x0)); ++i) x0 *= 0.5;
    if (!std::isfinite(tp.value(x0))) x0.setZero();
  }

  // Ascent runs in z with c_k = z_k^2 / w_k, w_k the discounted length of knot k.
  // This removes the c^{-3/2} curvature of U1 near zero and the spread of
  // knot weights; a short pass in c itself follows.
  Vector w(K);
  for (int k = 0; k < K; ++k)
    w[k] = (std::exp(-cfg.rho * est.layout.start_time(k)) -
            std::exp(-cfg.rho * est.layout.start_time(k + 1))) / cfg.rho;
  AscentOptions ao;
  ao.max_iter = cfg.numerics.max_iter;
  ao.grad_tol = opts.grad_tol;
  ao.f_tol = 1e-12;
  AscentOptions newton = ao;
  newton.max_iter = 60;
  newton.f_tol = 1e-12;
  AscentOptions first = ao;
  first.max_iter = std::min(ao.max_iter, 150);
  // Kinked f0 or U2 are replaced by smooth minorants whose width shrinks stage by
  // stage; without a state utility that blows up at 0 the state constraint can
  // bind, and a vanishing log barrier keeps the iterates interior. The reported
  // value is the true payoff of the final control.
  const bool smooth = static_cast<bool>(cfg.dynamics.smoothed) || static_cast<bool>(cfg.u2.smoothed);
  const bool barrier = !cfg.u2.nonintegrable_at_zero;
  const int stages = (smooth || barrier) ? 3 : 1;
  Vector x = x0;
  AscentResult rz, res;
  int iters = 0;
  double v_eta0 = 0.0;
  for (int st = 0; st < stages; ++st) {
    const double scale = std::pow(10.0, -st);
    ProblemConfig sc = cfg;
    if (cfg.dynamics.smoothed) sc.dynamics = cfg.dynamics.smoothed(1e-2 * scale);
    if (cfg.u2.smoothed) sc.u2 = cfg.u2.smoothed(1e-2 * scale);
    TranscribedPayoff sp(sc, eta, est.layout, cfg.numerics.continuation);
    if (barrier) sp.set_barrier(1e-2 * scale);
    for (int i = 0; i < 40 && !std::isfinite(sp.objective(x)); ++i) x *= 0.5;
    Vector gc;
    auto in_z = [&](const Vector& z, Vector* g) {
      const Vector c = (z.array().square() / w.array()).matrix();
      if (!g) return sp.objective(c);
      const double v = sp.value_and_gradient(c, gc);
      *g = (gc.array() * 2.0 * z.array() / w.array()).matrix();
      return v;
    };
    auto in_c = [&](const Vector& c, Vector* g) {
      if (g) return sp.value_and_gradient(c, *g);
      return sp.objective(c);
    };
    if (st == 0) {
      rz = projected_ascent(in_z, (x.array() * w.array()).sqrt().matrix(), first);
      if (!std::isfinite(rz.value))
        throw Error(ErrorCode::Inadmissible, "no admissible control found from the zero-control start");
      x = (rz.x.array().square() / w.array()).matrix();
    }
    res = projected_newton(in_c, x, newton);
    if (!std::isfinite(res.value))
      throw Error(ErrorCode::Inadmissible, "no admissible control found from the zero-control start");
    iters += (st == 0 ? rz.iterations : 0) + res.iterations;
    x = res.x;
    if (st + 1 == stages) {
      est.smooth_value = sp.objective(x);
      if (opts.envelope) {
        Vector g;
        sp.value_and_gradient(x, g, &v_eta0);
      }
    }
  }
  // kinks in f0 or U2 can keep the projected gradient away from zero; what matters
  // is that the value has settled well inside the estimator tolerance
  const double settle = 1e-2 * cfg.numerics.value_tol;
  const bool z_ok = rz.converged || rz.recent_gain <= settle;
  const bool c_ok = res.converged || res.recent_gain <= settle;
  if (!z_ok && !c_ok)
    throw Error(ErrorCode::NoConvergence, "ascent still gaining " + std::to_string(res.recent_gain) +
                                              " per window at max_iter");

  est.knots = x;
  est.value = tp.value(x);
  est.v_eta0 = v_eta0;
  est.solver_iters = iters;
  est.bellman_residual = res.projected_gradient;
  est.converged = z_ok || c_ok;
  est.floor = tp.floor(x);
  est.tail_gap = std::exp(-cfg.rho * M) * (cfg.u1.u_sup - u1_0) / cfg.rho + tp.remainder_gap(x);
  return est;
}

SlopeEstimate slope_eta0(const ProblemConfig& cfg, const HistoryState& eta, double h,
                         const ValueOptions& opts) {
  SlopeEstimate s;
  if (!(h > 0.0)) h = 1e-3 * (1.0 + eta.eta0);
  int shrink = 0;
  while (!domain_probe(cfg, shifted(eta, -h)).in_domain) {
    if (++shrink > 30) throw Error(ErrorCode::OutOfDomain, "eta0 - h leaves the domain for every h tried");
    h *= 0.5;
  }
  s.h = h;
  s.center = estimate_value(cfg, eta, opts);
  if (!std::isfinite(s.center.value)) throw Error(ErrorCode::OutOfDomain, "state is outside the domain");
  ValueOptions warm = opts;
  warm.warm_start = s.center.knots;
  warm.horizon = s.center.horizon;
  s.plus = estimate_value(cfg, shifted(eta, h), warm);
  s.minus = estimate_value(cfg, shifted(eta, -h), warm);
  s.forward = (s.plus.smooth_value - s.center.smooth_value) / h;
  s.backward = (s.center.smooth_value - s.minus.smooth_value) / h;
  s.central = (s.plus.smooth_value - s.minus.smooth_value) / (2.0 * h);
  return s;
}

double partial_eta0(const ProblemConfig& cfg, const HistoryState& eta, double h,
                    const ValueOptions& opts) {
  const SlopeEstimate s = slope_eta0(cfg, eta, h, opts);
  if (!(s.central > 0.0))
    throw Error(ErrorCode::GradientFailure,
                "central difference " + std::to_string(s.central) + " is not positive");
  return s.central;
}

HistoryState sample_state(const ProblemConfig& cfg, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int N = cfg.numerics.n_hist;
  HistoryState eta;
  eta.eta0 = lo + (hi - lo) * U(rng);
  const double scale = 0.5 + U(rng);
  const double amp = 0.5 * U(rng);
  const double freq = 1.0 + 3.0 * U(rng);
  const double phase = 6.283185307179586 * U(rng);
  eta.eta1.resize(N);
  for (int j = 0; j < N; ++j) {
    const double xi = cfg.node(j);
    eta.eta1[j] = scale * eta.eta0 * (1.0 + amp * std::sin(6.283185307179586 * freq * xi / cfg.T + phase));
  }
  return eta;
}

PropertyReport property_scan(const ProblemConfig& cfg, int n_samples, std::uint64_t seed,
                             int workers) {
  PropertyReport rep;
  rep.tol_num = 2.0 * cfg.numerics.value_tol;
  const double bound = cfg.utility_sup() / cfg.rho;
  const int n_cont = std::max(1, n_samples / 3);
  const int total = 2 * n_samples + n_cont;
  std::vector<std::vector<PropertyRow>> rows(total);
  std::vector<double> modulus(total, 0.0);

  auto bound_row = [&](double v) {
    PropertyRow r;
    r.kind = "bound";
    r.lhs = v;
    r.rhs = bound;
    r.passed = v < bound;
    return r;
  };

  parallel_for(total, workers, [&](int t) {
    auto& out = rows[t];
    if (t < n_samples) {
      const HistoryState a = sample_state(cfg, seed * 1000003ULL + 2 * t);
      const HistoryState b = sample_state(cfg, seed * 1000003ULL + 2 * t + 1);
      HistoryState m;
      m.eta0 = 0.5 * (a.eta0 + b.eta0);
      m.eta1 = 0.5 * (a.eta1 + b.eta1);
      const ValueEstimate va = estimate_value(cfg, a), vb = estimate_value(cfg, b);
      ValueOptions w;
      w.warm_start = 0.5 * (va.knots + vb.knots);
      const ValueEstimate vm = estimate_value(cfg, m, w);
      PropertyRow r;
      r.kind = "concavity";
      r.lhs = vm.value;
      r.rhs = 0.5 * (va.value + vb.value);
      r.passed = r.lhs >= r.rhs - rep.tol_num;
      out = {r, bound_row(va.value), bound_row(vb.value), bound_row(vm.value)};
    } else if (t < 2 * n_samples) {
      const HistoryState a = sample_state(cfg, seed * 7919ULL + 5 * t + 11);
      const ValueEstimate va = estimate_value(cfg, a);
      ValueOptions w;
      w.warm_start = va.knots;
      const ValueEstimate vb = estimate_value(cfg, shifted(a, 0.5), w);
      PropertyRow r;
      r.kind = "monotonicity";
      r.lhs = vb.value;
      r.rhs = va.value;
      r.passed = r.lhs > r.rhs - rep.tol_num;
      out = {r, bound_row(vb.value)};
    } else {
      const HistoryState a = sample_state(cfg, seed * 104729ULL + 3 * t + 7);
      std::mt19937_64 rng(seed + 977ULL * t);
      std::uniform_real_distribution<double> U(-1.0, 1.0);
      HistoryState b = a;
      b.eta0 += 0.01 * U(rng);
      for (Eigen::Index j = 0; j < b.eta1.size(); ++j) b.eta1[j] = std::max(0.0, b.eta1[j] + 0.01 * U(rng));
      const ValueEstimate va = estimate_value(cfg, a);
      ValueOptions w;
      w.warm_start = va.knots;
      const ValueEstimate vb = estimate_value(cfg, b, w);
      PropertyRow r;
      r.kind = "continuity";
      r.lhs = std::abs(va.value - vb.value);
      const HilbertPoint d = to_hilbert(a) - to_hilbert(b);
      r.rhs = cfg.r != 0.0 ? minus_one_norm(cfg, d) : norm(cfg.T, d);
      r.passed = true;
      if (r.rhs > 0.0) modulus[t] = r.lhs / r.rhs;
      out = {r};
    }
  });

  for (int t = 0; t < total; ++t) {
    for (const PropertyRow& r : rows[t]) {
      if (r.kind == "concavity") {
        ++rep.concavity_checks;
        rep.concavity_violations += !r.passed;
      } else if (r.kind == "monotonicity") {
        ++rep.monotone_checks;
        rep.monotone_violations += !r.passed;
      } else if (r.kind == "bound") {
        ++rep.bound_checks;
        rep.bound_violations += !r.passed;
      }
      rep.rows.push_back(r);
    }
    rep.continuity_modulus = std::max(rep.continuity_modulus, modulus[t]);
  }
  return rep;
}

BlowupScan boundary_blowup_scan(const ProblemConfig& cfg, const Vector& eta1_fixed, int steps,
                                double start_gap, double end_gap) {
  if (steps < 2 || !(start_gap > end_gap) || !(end_gap > 0.0))
    throw Error(ErrorCode::InvalidArgument, "blow-up walk needs steps >= 2 and start_gap > end_gap > 0");
  BlowupScan scan;
  scan.boundary = domain_boundary(cfg, eta1_fixed);
  HistoryState eta;
  eta.eta1 = eta1_fixed;
  std::optional<Vector> warm;
  for (int k = 0; k < steps; ++k) {
    const double gap = start_gap * std::pow(end_gap / start_gap, static_cast<double>(k) / (steps - 1));
    eta.eta0 = scan.boundary + gap;
    if (!domain_probe(cfg, eta).in_domain) scan.probe_flips_once = false;
    ValueOptions opts;
    opts.warm_start = warm;
    const SlopeEstimate s = slope_eta0(cfg, eta, std::min(1e-3 * (1.0 + eta.eta0), 0.25 * gap), opts);
    warm = s.center.knots;
    BlowupRow row;
    row.eta0 = eta.eta0;
    row.value = s.center.value;
    row.v_eta0 = s.center.v_eta0;
    row.central = s.central;
    scan.rows.push_back(row);
  }
  if (scan.boundary > 0.0) {
    eta.eta0 = scan.boundary * (1.0 - 1e-6);
    if (domain_probe(cfg, eta).in_domain) scan.probe_flips_once = false;
  }
  return scan;
}

}  // namespace ddeopt
