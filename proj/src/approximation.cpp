#include "ddeopt/approximation.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "ddeopt/detail/scheme.hpp"

namespace ddeopt {

namespace {

int grid_steps(const ProblemConfig& cfg, double t) { return detail::step_count(cfg, t); }

ControlPath truncated(ControlPath c, const ProblemConfig& cfg, double M) {
  const int S = grid_steps(cfg, M);
  if (c.dt != cfg.state_step()) {
    ControlPath r;
    r.dt = cfg.state_step();
    r.values.resize(S);
    for (int i = 0; i < S; ++i) r.values[i] = c.at((i + 0.5) * r.dt);
    return r;
  }
  if (c.values.size() > S) c.values.conservativeResize(S);
  return c;
}

// sup over x >= nu of U2(x + d) - U2(x), for concave nondecreasing U2
double state_modulus(const StateUtilitySpec& u2, double nu, double d) {
  if (u2.zero) return 0.0;
  return u2.u(nu + d) - u2.u(nu);
}

double sum(const std::vector<BudgetItem>& items) {
  double s = 0.0;
  for (const auto& it : items) s += it.value;
  return s;
}

void finish(CertifiedGap& g) {
  g.gap = g.reference_value - g.payoff;
  g.budget_total = sum(g.budget);
  g.pass = g.payoff >= g.reference_value - g.paper_constant - g.budget_total;
}

int power_of_two_above(double inv_floor, int cap) {
  for (int n = 1; n <= cap; n *= 2)
    if (1.0 / n < inv_floor) return n;
  return 0;
}

double truncation_horizon(const ProblemConfig& cfg, double eps) {
  const double M = epsilon_truncation_time(cfg.rho, cfg.u1.u_sup, cfg.u1.u(0.0), eps,
                                           cfg.state_step());
  return std::max(M, cfg.state_step());
}

struct Synthesis {
  ClosedLoop loop;
  double deficit = 0.0;
};

Synthesis synthesize(const ProblemConfig& cfg, const HistoryState& eta, double M, int stride) {
  auto policy = FeedbackPolicy::live(cfg);
  Synthesis s;
  s.loop = closed_loop_solve(policy, cfg, eta, M, stride);
  s.deficit = hamiltonian_deficit(cfg, s.loop);
  return s;
}

ApproxResult pointwise_core(const ProblemConfig& cfg, const HistoryState& eta, double eps,
                            const ApproxOptions& opts) {
  if (!cfg.u2.strong_blowup)
    throw Error(ErrorCode::InvalidArgument, "pointwise pipeline needs a strong blow-up U2");
  const ProblemConfig cfg_pw = with_pointwise_delay(cfg);
  const ValueEstimate V0 = estimate_value(cfg_pw, eta);
  if (!V0.in_domain) throw Error(ErrorCode::OutOfDomain, "state is outside the domain of V0");

  ApproxResult res;
  const double M = truncation_horizon(cfg, eps);
  res.horizon = M;
  res.nu = nu_floor(cfg_pw, eta, M, eps);
  const double tail_w = (1.0 - std::exp(-cfg.rho * M)) / cfg.rho;

  struct Cell {
    ValueEstimate V;
    GronwallCertificate cert;
    double nu1 = 0.0;
  };
  std::map<int, Cell> cells;
  auto cell = [&](int k) -> Cell& {
    auto it = cells.find(k);
    if (it != cells.end()) return it->second;
    Cell c;
    const ProblemConfig ck = with_kernel(cfg, k);
    c.V = estimate_value(ck, eta);
    const ControlPath path = truncated(c.V.control(), cfg, M);
    c.cert = gronwall_certificate(cfg, k, eta, path, M);
    c.nu1 = 0.5 * pointwise_delay_integrate(cfg, eta, path, M).min_value;
    return cells.emplace(k, std::move(c)).first->second;
  };

  int chosen = 0;
  for (int k = 1; k <= opts.k_cap; k *= 2) {
    const Cell& c = cell(k);
    const double b = c.cert.bound;
    if (b < c.nu1 && tail_w * state_modulus(cfg.u2, c.nu1, b) <= 0.5 * eps) {
      chosen = k;
      break;
    }
  }
  if (chosen == 0)
    throw Error(ErrorCode::SweepExhausted,
                "Gronwall bound did not clear the floor for k <= " + std::to_string(opts.k_cap));
  res.k = chosen;
  res.floor = 2.0 * cells.at(chosen).nu1;
  res.target_value = cells.at(chosen).V.value;

  std::vector<int> params = opts.table_params;
  if (params.empty()) params = {1, 2, 4, 8, 16};
  for (int k : params) {
    const Cell& c = cell(k);
    res.table.push_back({"k", static_cast<double>(k), c.V.value, c.cert.bound,
                         std::abs(c.V.value - V0.value)});
  }

  CertifiedGap& g = res.gap;
  g.reference_value = V0.value;
  g.paper_constant = eps;
  g.budget = {{"target_estimator_tolerance", V0.tolerance}, {"target_tail_gap", V0.tail_gap},
              {"approx_estimator_tolerance", cells.at(chosen).V.tolerance}};
  const ProblemConfig ck = with_kernel(cfg, chosen);
  if (opts.synthesize) {
    const Synthesis s = synthesize(ck, eta, M, opts.stride);
    res.control = s.loop.control;
    res.realized_floor = s.loop.trajectory.min_value;
    g.budget.push_back({"feedback_deficit", s.deficit});
  } else {
    res.control = truncated(cells.at(chosen).V.control(), cfg, M);
    res.realized_floor = integrate(ck, eta, res.control, M).min_value;
  }
  g.payoff = objective(cfg_pw, eta, res.control, M, TailPolicy::ZeroControlContinuation).total();
  finish(g);
  return res;
}

}  // namespace

double epsilon_truncation_time(double rho, double u1_sup, double u1_at_0, double eps,
                               double grid_step) {
  if (!(u1_sup > u1_at_0))
    throw Error(ErrorCode::DegenerateUtility, "sup U1 must exceed U1(0)");
  if (!(eps > 0.0) || !(rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps and rho must be positive");
  double M = std::log(2.0 * (u1_sup - u1_at_0) / (rho * eps)) / rho;
  if (!(M > 0.0)) return 0.0;
  if (grid_step > 0.0) M = std::ceil(M / grid_step - 1e-9) * grid_step;
  return M;
}

StateUtilityFamily build_state_utility_family(int n, BlowupStrength strength) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "family index must be >= 1");
  StateUtilityFamily f;
  f.n = n;
  f.strength = strength;
  f.member = strength == BlowupStrength::Weak ? inverse_state_utility(n)
                                              : inverse_square_state_utility(n);
  return f;
}

KernelFamily build_kernel_family(int k, double T, int n_hist) {
  KernelFamily f;
  f.k = k;
  f.member = mollified_kernel(T, n_hist, k);
  const Vector& a = f.member.samples;
  const double h = T / n_hist;
  double l1 = 0.0, l2 = 0.0;
  for (int j = 0; j <= n_hist; ++j) {
    const double w = (j == 0 || j == n_hist ? 0.5 : 1.0) * h;
    l1 += w * std::abs(a[j]);
    l2 += w * a[j] * a[j];
  }
  f.l1_mass = l1;
  f.l2_norm = std::sqrt(l2);
  return f;
}

double kernel_moment(const KernelSpec& a, double T, const std::function<double(double)>& f) {
  const int N = static_cast<int>(a.samples.size()) - 1;
  const double h = T / N;
  double s = 0.0;
  for (int j = 0; j <= N; ++j)
    s += (j == 0 || j == N ? 0.5 : 1.0) * h * a.samples[j] * f(-T + j * h);
  return s;
}

ProblemConfig with_pointwise_delay(ProblemConfig cfg) {
  cfg.delay = DelayKind::Pointwise;
  return cfg;
}

ProblemConfig with_kernel(ProblemConfig cfg, int k) {
  cfg.delay = DelayKind::Distributed;
  cfg.kernel = mollified_kernel(cfg.T, cfg.numerics.n_hist, k);
  return cfg;
}

ProblemConfig with_state_utility(ProblemConfig cfg, const StateUtilitySpec& u2) {
  cfg.u2 = u2;
  return cfg;
}

Trajectory pointwise_delay_integrate(const ProblemConfig& cfg, const HistoryState& eta,
                                     const ControlPath& c, double horizon) {
  return integrate(with_pointwise_delay(cfg), eta, c, horizon);
}

GronwallCertificate gronwall_certificate(const ProblemConfig& cfg, int k, const HistoryState& eta,
                                         const ControlPath& c, double t) {
  const ProblemConfig ck = with_kernel(cfg, k);
  const Trajectory xk = integrate(ck, eta, c, t);
  const Trajectory y = pointwise_delay_integrate(cfg, eta, c, t);
  if (!xk.admissible || !y.admissible)
    throw Error(ErrorCode::Inadmissible, "Gronwall certificate needs admissible trajectories");
  const int N = cfg.numerics.n_hist, m = cfg.numerics.substeps;
  if (N % 2 != 0) throw Error(ErrorCode::ConfigMismatch, "lag T/2 is off-grid for odd n_hist");
  const int S = grid_steps(cfg, t);
  const int P = y.history_points;
  const double dt = cfg.state_step();
  const detail::Stencil st = detail::make_stencil(ck);

  GronwallCertificate g;
  g.t = t;
  g.lipschitz = cfg.dynamics.lipschitz_const + std::abs(cfg.r);
  const KernelFamily fam = build_kernel_family(k, cfg.T, N);
  g.K = g.lipschitz * (1.0 + std::max(std::sqrt(cfg.T), fam.l1_mass));
  double integral = 0.0, prev = 0.0;
  for (int i = 0; i <= S; ++i) {
    const int at = P + i;
    double conv = st.w_now * y.values[at];
    for (std::size_t j = 0; j < st.offsets.size(); ++j) conv += st.weights[j] * y.values[at + st.offsets[j]];
    const double d = std::abs(conv - y.values[at - (N / 2) * m]);
    if (i > 0) integral += 0.5 * dt * (prev + d);
    prev = d;
    g.observed_gap = std::max(g.observed_gap, std::abs(xk.values[at] - y.values[at]));
  }
  g.u_k = g.lipschitz * integral;
  g.h_of_t = 1.0 + g.K * t * std::exp(g.K * t);
  g.bound = g.h_of_t * g.u_k;
  return g;
}

NuFloor nu_floor(const ProblemConfig& cfg, const HistoryState& eta, double M, double eps) {
  if (!cfg.u2.strong_blowup)
    throw Error(ErrorCode::InvalidArgument, "nu floor needs a strong blow-up U2");
  if (!(M > 0.0)) M = epsilon_truncation_time(cfg.rho, cfg.u1.u_sup, cfg.u1.u(0.0), 2.0 * eps,
                                              cfg.state_step());
  NuFloor out;
  out.j0 = (cfg.u1.u(0.0) + cfg.u2.u(eta.eta0)) / cfg.rho;
  out.rhs = out.j0 - cfg.utility_sup() / cfg.rho - 1.0;

  // growth constant of x(t) <= x(s)(1 + C(t-s)) + C(t-s) over a control bundle
  const int S = grid_steps(cfg, std::ceil((M + 1.0) / cfg.state_step() - 1e-9) * cfg.state_step());
  const double dt = cfg.state_step();
  double C = 0.0;
  for (double cv : {0.0, 0.1, 0.25, 0.5, 1.0}) {
    const Trajectory tr = integrate(cfg, eta, ControlPath::constant(dt, S, cv), S * dt);
    int last = S;
    for (int i = 0; i <= S; ++i)
      if (!(tr.state_at_step(i) > 0.0)) {
        last = i - 1;
        break;
      }
    for (int s = 0; s < last; ++s)
      for (int t = s + 1; t <= last; ++t) {
        const double xs = tr.state_at_step(s), xt = tr.state_at_step(t);
        C = std::max(C, (xt - xs) / ((t - s) * dt * (1.0 + xs)));
      }
  }
  out.C_M = 2.0 * std::max(C, 1e-6);

  for (int j = 1; j <= 40; ++j) {
    const double nu = std::ldexp(1.0, -j);
    const double w = nu / (2.0 * out.C_M);
    const double lhs = w * cfg.u2.u(2.0 * nu) * std::exp(-cfg.rho * (M + 1.0));
    if (nu < 1.0 && w < 1.0 && lhs < out.rhs && out.rhs < 0.0) {
      out.nu = nu;
      out.lhs = lhs;
      out.dyadic_exponent = j;
      return out;
    }
  }
  throw Error(ErrorCode::NoFeasibleNu, "no dyadic nu >= 2^-40 meets the smallness clauses");
}

ApproxResult construct_eps_optimal_nostate(const ProblemConfig& cfg, const HistoryState& eta,
                                           double eps, const ApproxOptions& opts) {
  if (!cfg.u2.zero) throw Error(ErrorCode::InvalidArgument, "no-state pipeline needs U2 == 0");
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  const ValueEstimate V0 = estimate_value(cfg, eta);
  if (!V0.in_domain) throw Error(ErrorCode::OutOfDomain, "state is outside the domain of V0");

  ApproxResult res;
  const double M = std::max(truncation_horizon(cfg, eps),
                            (grid_steps(cfg, cfg.T) + 1) * cfg.state_step());
  res.horizon = M;
  const ControlPath ce = truncated(V0.control(), cfg, M);
  res.floor = integrate(cfg, eta, ce, M).min_value;
  res.n = power_of_two_above(res.floor, opts.n_cap);
  if (res.n == 0)
    throw Error(ErrorCode::SweepExhausted,
                "trajectory floor is below 1/" + std::to_string(opts.n_cap));

  std::vector<int> params = opts.table_params;
  if (params.empty()) params = {2, 4, 8, 16};
  std::map<int, ValueEstimate> Vn;
  auto value_n = [&](int n) -> const ValueEstimate& {
    auto it = Vn.find(n);
    if (it != Vn.end()) return it->second;
    const auto cn = with_state_utility(cfg, build_state_utility_family(n, BlowupStrength::Weak).member);
    return Vn.emplace(n, estimate_value(cn, eta)).first->second;
  };
  for (int n : params) {
    const ValueEstimate& v = value_n(n);
    res.table.push_back({"n", static_cast<double>(n), v.value, 1.0 / n, V0.value - v.value});
  }
  res.target_value = value_n(res.n).value;

  CertifiedGap& g = res.gap;
  g.reference_value = V0.value;
  g.paper_constant = eps;
  g.budget = {{"target_estimator_tolerance", V0.tolerance}, {"target_tail_gap", V0.tail_gap},
              {"approx_estimator_tolerance", value_n(res.n).tolerance}};
  const auto cn = with_state_utility(cfg, build_state_utility_family(res.n, BlowupStrength::Weak).member);
  if (opts.synthesize) {
    const Synthesis s = synthesize(cn, eta, M, opts.stride);
    res.control = s.loop.control;
    res.realized_floor = s.loop.trajectory.min_value;
    g.budget.push_back({"feedback_deficit", s.deficit});
  } else {
    res.control = truncated(value_n(res.n).control(), cfg, M);
    res.realized_floor = integrate(cfg, eta, res.control, M).min_value;
  }
  g.payoff = objective(cfg, eta, res.control, M, TailPolicy::ZeroControlContinuation).total();
  finish(g);
  return res;
}

ApproxResult construct_eps_optimal_pointwise(const ProblemConfig& cfg, const HistoryState& eta,
                                             double eps, const ApproxOptions& opts) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  return pointwise_core(cfg, eta, eps, opts);
}

ApproxResult construct_eps_optimal_combined(const ProblemConfig& cfg, const HistoryState& eta,
                                            double eps, const ApproxOptions& opts) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  const ProblemConfig cfg00 = with_state_utility(with_pointwise_delay(cfg), zero_state_utility());
  const ValueEstimate V00 = estimate_value(cfg00, eta);
  if (!V00.in_domain) throw Error(ErrorCode::OutOfDomain, "state is outside the domain of V00");
  const double M = truncation_horizon(cfg, eps);
  const double nu1 = 0.5 * integrate(cfg00, eta, truncated(V00.control(), cfg, M), M).min_value;
  const int n = power_of_two_above(nu1, opts.n_cap);
  if (n == 0)
    throw Error(ErrorCode::SweepExhausted, "floor of the V00 control is below 1/" +
                                               std::to_string(opts.n_cap));
  const auto cn = with_state_utility(cfg, build_state_utility_family(n, BlowupStrength::Strong).member);
  ApproxResult res = pointwise_core(cn, eta, eps, opts);
  res.n = n;
  res.floor = 2.0 * nu1;

  CertifiedGap inner = res.gap;
  CertifiedGap& g = res.gap;
  g = CertifiedGap{};
  g.reference_value = V00.value;
  g.paper_constant = 3.0 * eps;
  g.budget = {{"target_estimator_tolerance", V00.tolerance}, {"target_tail_gap", V00.tail_gap}};
  for (const auto& it : inner.budget)
    if (it.name != "target_estimator_tolerance" && it.name != "target_tail_gap")
      g.budget.push_back(it);
  g.payoff = objective(cfg00, eta, res.control, res.horizon, TailPolicy::ZeroControlContinuation).total();
  finish(g);
  for (auto& row : res.table) row.gap = std::abs(row.value_estimate - V00.value);
  return res;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "parameter,value,value_estimate,certificate,gap\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g\n", r.parameter.c_str(), r.value,
                  r.value_estimate, r.certificate, r.gap);
    os << buf;
  }
}

std::string to_text(const CertifiedGap& g) {
  std::ostringstream os;
  os.precision(12);
  os << "reference_value: " << g.reference_value << '\n'
     << "payoff: " << g.payoff << '\n'
     << "gap: " << g.gap << '\n'
     << "paper_constant: " << g.paper_constant << '\n'
     << "budget: " << g.budget_total << '\n';
  for (const auto& it : g.budget) os << "  " << it.name << ": " << it.value << '\n';
  os << "pass: " << (g.pass ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace ddeopt
