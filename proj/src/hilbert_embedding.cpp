#include "ddeopt/hilbert_embedding.hpp"

#include <algorithm>
#include <cmath>

#include "ddeopt/detail/control_grid.hpp"
#include "ddeopt/detail/scheme.hpp"

namespace ddeopt {

namespace {

void check_point(const ProblemConfig& cfg, const HilbertPoint& p) {
  if (p.eta1.size() != cfg.numerics.n_hist + 1)
    throw Error(ErrorCode::ConfigMismatch, "Hilbert point has " + std::to_string(p.eta1.size()) +
                                               " nodes, grid expects " +
                                               std::to_string(cfg.numerics.n_hist + 1));
}

// piecewise-linear value of the node samples at s in [-T, 0]
double node_value(const Vector& v, double T, double s) {
  const int N = static_cast<int>(v.size()) - 1;
  const double pos = (s + T) / T * N;
  if (pos <= 0.0) return v[0];
  if (pos >= N) return v[N];
  const int j = static_cast<int>(std::floor(pos));
  const double w = pos - j;
  if (w == 0.0) return v[j];
  return (1.0 - w) * v[j] + w * v[j + 1];
}

}  // namespace

HilbertPoint to_hilbert(const HistoryState& eta) {
  HilbertPoint p;
  p.eta0 = eta.eta0;
  const int N = static_cast<int>(eta.eta1.size());
  p.eta1.resize(N + 1);
  p.eta1.head(N) = eta.eta1;
  p.eta1[N] = eta.eta0;
  return p;
}

HistoryState to_history(const HilbertPoint& p) {
  HistoryState h;
  h.eta0 = p.eta0;
  h.eta1 = p.eta1.head(p.eta1.size() - 1);
  return h;
}

HilbertPoint zero_point(int n_hist) {
  HilbertPoint p;
  p.eta0 = 0.0;
  p.eta1 = Vector::Zero(n_hist + 1);
  return p;
}

double inner(double T, const HilbertPoint& p, const HilbertPoint& q) {
  const int N = static_cast<int>(p.eta1.size()) - 1;
  const double h = T / N;
  double s = 0.0;
  for (int j = 0; j <= N; ++j) s += (j == 0 || j == N ? 0.5 : 1.0) * p.eta1[j] * q.eta1[j];
  return p.eta0 * q.eta0 + h * s;
}

double norm(double T, const HilbertPoint& p) { return std::sqrt(inner(T, p, p)); }

HilbertPoint apply_semigroup(const ProblemConfig& cfg, double t, const HilbertPoint& p) {
  check_point(cfg, p);
  if (t < 0.0) throw Error(ErrorCode::InvalidArgument, "semigroup time must be nonnegative");
  const int N = cfg.numerics.n_hist;
  const double h = cfg.hist_step();
  HilbertPoint out;
  out.eta0 = p.eta0 * std::exp(cfg.r * t);
  out.eta1.resize(N + 1);
  for (int j = 0; j <= N; ++j) {
    const double s = t + (j - N) * h;
    // nodes that stay in the past are shifted; snap to the grid when commensurate
    if (s < -1e-12 * cfg.T) {
      const double pos = (s + cfg.T) / h;
      const double snapped = std::round(pos);
      if (std::abs(pos - snapped) < 1e-9)
        out.eta1[j] = p.eta1[static_cast<int>(snapped)];
      else
        out.eta1[j] = node_value(p.eta1, cfg.T, s);
    } else {
      out.eta1[j] = p.eta0 * std::exp(cfg.r * std::max(s, 0.0));
    }
  }
  return out;
}

HilbertPoint apply_A_inverse(const ProblemConfig& cfg, const HilbertPoint& p) {
  check_point(cfg, p);
  if (cfg.r == 0.0) throw Error(ErrorCode::DivisionByZero, "A^{-1} requires r != 0");
  const int N = cfg.numerics.n_hist;
  const double h = cfg.hist_step();
  HilbertPoint q;
  q.eta0 = p.eta0 / cfg.r;
  q.eta1.resize(N + 1);
  double tail = 0.0;  // int_{xi_j}^0 eta1
  q.eta1[N] = q.eta0;
  for (int j = N - 1; j >= 0; --j) {
    tail += 0.5 * h * (p.eta1[j] + p.eta1[j + 1]);
    q.eta1[j] = q.eta0 - tail;
  }
  return q;
}

HilbertPoint apply_discrete_A(const ProblemConfig& cfg, const HilbertPoint& q) {
  check_point(cfg, q);
  const int N = cfg.numerics.n_hist;
  const double h = cfg.hist_step();
  HilbertPoint p;
  p.eta0 = cfg.r * q.eta0;
  p.eta1.resize(N);
  for (int j = 0; j < N; ++j) p.eta1[j] = (q.eta1[j + 1] - q.eta1[j]) / h;
  return p;
}

double minus_one_norm(const ProblemConfig& cfg, const HilbertPoint& p) {
  return norm(cfg.T, apply_A_inverse(cfg, p));
}

MildSolution mild_solve(const ProblemConfig& cfg, const HilbertPoint& p, const ControlPath& c,
                        double horizon) {
  check_point(cfg, p);
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  const int S = detail::step_count(cfg, horizon);
  const int ratio = detail::control_ratio(cfg, c);
  const detail::Stencil st = detail::make_stencil(cfg);
  const double dt = cfg.state_step();
  const double r = cfg.r;
  const int L = 2 * S;  // half-step grid tau_l = l dt / 2

  std::vector<double> X(L + 1), Xn(L + 1), F(L + 1), I(L + 1);
  for (int l = 0; l <= L; ++l) X[l] = p.eta0 * std::exp(r * l * 0.5 * dt);

  // history values at negative half indices are fixed across iterations
  const int lag_max = 2 * cfg.numerics.n_hist * cfg.numerics.substeps;
  std::vector<double> past(lag_max + 1, 0.0);
  for (int q = 1; q <= lag_max; ++q) past[q] = node_value(p.eta1, cfg.T, -q * 0.5 * dt);
  auto value = [&](int q) { return q >= 0 ? X[q] : past[-q]; };

  MildSolution out;
  out.dt = dt;
  bool converged = false;
  for (int it = 1; it <= 200; ++it) {
    for (int l = 0; l <= L; ++l) {
      double y = st.w_now * X[l];
      for (std::size_t j = 0; j < st.offsets.size(); ++j) y += st.weights[j] * value(l + 2 * st.offsets[j]);
      F[l] = cfg.dynamics.f0(std::max(X[l], 0.0), y);
    }
    I[0] = 0.0;
    for (int i = 0; i < S; ++i) {
      const double ci = detail::control_at_step(c, ratio, i);
      const double t0 = i * dt;
      const double ga = std::exp(-r * t0) * (F[2 * i] - ci);
      const double gm = std::exp(-r * (t0 + 0.5 * dt)) * (F[2 * i + 1] - ci);
      const double gb = std::exp(-r * (t0 + dt)) * (F[2 * i + 2] - ci);
      I[2 * i + 1] = I[2 * i] + dt * (5.0 * ga + 8.0 * gm - gb) / 24.0;
      I[2 * i + 2] = I[2 * i] + dt * (ga + 4.0 * gm + gb) / 6.0;
    }
    double diff = 0.0;
    for (int l = 0; l <= L; ++l) {
      Xn[l] = std::exp(r * l * 0.5 * dt) * (p.eta0 + I[l]);
      if (!std::isfinite(Xn[l])) throw Error(ErrorCode::NonFiniteState, "mild iterate diverged");
      diff = std::max(diff, std::abs(Xn[l] - X[l]));
    }
    X.swap(Xn);
    out.iterations = it;
    out.last_update = diff;
    if (diff < 1e-10) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw Error(ErrorCode::NoConvergence,
                "Picard iteration stalled at update " + std::to_string(out.last_update));

  const int N = cfg.numerics.n_hist, m = cfg.numerics.substeps;
  out.states.resize(S + 1);
  for (int i = 0; i <= S; ++i) {
    HilbertPoint& q = out.states[i];
    q.eta0 = X[2 * i];
    q.eta1.resize(N + 1);
    for (int j = 0; j <= N; ++j) q.eta1[j] = value(2 * (i + (j - N) * m));
  }
  return out;
}

double minus_one_growth(const ProblemConfig& cfg, const HilbertPoint& p, const HilbertPoint& q,
                        double horizon) {
  const auto a = mild_solve(cfg, p, ControlPath{}, horizon);
  const auto b = mild_solve(cfg, q, ControlPath{}, horizon);
  const double d0 = minus_one_norm(cfg, p - q);
  if (!(d0 > 0.0)) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.states.size(); ++i)
    worst = std::max(worst, minus_one_norm(cfg, a.states[i] - b.states[i]) / d0);
  return worst;
}

double lagged_generator_offset(double r, double eta0, double integral) {
  return eta0 / (r + 1.0) - r / (r + 1.0) * integral;
}

HilbertPoint lagged_generator_inverse(double r, double T, const HilbertPoint& p) {
  if (r == 0.0) throw Error(ErrorCode::DivisionByZero, "generator inverse requires r != 0");
  const int N = static_cast<int>(p.eta1.size()) - 1;
  const double h = T / N;
  Vector cum(N + 1);  // int_{-T}^{xi_j} eta1
  cum[0] = 0.0;
  for (int j = 0; j < N; ++j) cum[j + 1] = cum[j] + 0.5 * h * (p.eta1[j] + p.eta1[j + 1]);
  const double c = lagged_generator_offset(r, p.eta0, cum[N]);
  HilbertPoint q;
  q.eta0 = (p.eta0 - c) / r;
  q.eta1 = Vector::Constant(N + 1, c) + cum;
  return q;
}

std::vector<CounterexampleRow> pointwise_delay_counterexample(int n_max, double T, double r) {
  std::vector<CounterexampleRow> rows;
  for (int n = 1; n <= n_max; n *= 2) {
    // piecewise-linear eta1^n, flat on the first 7 of 8n cells and ramping to zero on
    // the 8th; the amplitude makes int eta1^n = -1/2, so the partial integral falls
    // from 0 to -1/2 on [-T, -T + T/n] and stays there
    const int cells = 8 * n;
    const double h = T / cells;
    HilbertPoint p;
    p.eta0 = 0.5;
    p.eta1 = Vector::Zero(cells + 1);
    const double amp = -0.5 / (7.5 * h);
    for (int j = 0; j < 8; ++j) p.eta1[j] = amp;
    double integral = 0.0;
    for (int j = 0; j < cells; ++j) integral += 0.5 * h * (p.eta1[j] + p.eta1[j + 1]);
    const HilbertPoint q = lagged_generator_inverse(r, T, p);
    CounterexampleRow row;
    row.n = n;
    row.abs_eta0 = std::abs(p.eta0);
    row.integral = integral;
    row.offset = lagged_generator_offset(r, p.eta0, integral);
    row.minus_one_norm = norm(T, q);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ddeopt
