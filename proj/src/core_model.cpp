#include "ddeopt/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

namespace ddeopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * i / (n - 1));
  return g;
}

std::string point(double x, double y) { return "(" + num(x) + ", " + num(y) + ")"; }

double trapezoid_mass(const Vector& a, double h, int from) {
  double m = 0.0;
  for (int j = from; j + 1 < a.size(); ++j) m += 0.5 * h * (a[j] + a[j + 1]);
  return m;
}

double discrete_derivative_norm(const Vector& a, double h) {
  double s = 0.0;
  for (int j = 0; j + 1 < a.size(); ++j) {
    const double d = (a[j + 1] - a[j]) / h;
    s += h * d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::array<double, 2> DynamicsSpec::partials(double x, double y) const {
  if (grad) return grad(x, y);
  const double hx = 1e-6 * (1.0 + std::abs(x));
  const double hy = 1e-6 * (1.0 + std::abs(y));
  double fx;
  if (x - hx < 0.0)
    fx = (f0(x + hx, y) - f0(x, y)) / hx;
  else
    fx = (f0(x + hx, y) - f0(x - hx, y)) / (2 * hx);
  const double fy = (f0(x, y + hy) - f0(x, y - hy)) / (2 * hy);
  return {fx, fy};
}

double ProblemConfig::pos_tol(double eta0) const {
  return numerics.pos_tol_rel * (1.0 + std::abs(eta0));
}

std::string config_descriptor(const ProblemConfig& cfg) {
  std::ostringstream os;
  const auto& n = cfg.numerics;
  os << "name=" << cfg.name << ";r=" << num(cfg.r) << ";rho=" << num(cfg.rho)
     << ";T=" << num(cfg.T)
     << ";delay=" << (cfg.delay == DelayKind::Pointwise ? "pointwise" : "distributed")
     << ";n_hist=" << n.n_hist << ";substeps=" << n.substeps << ";knots=" << n.knots
     << ";value_tol=" << num(n.value_tol) << ";value_eps=" << num(n.value_eps)
     << ";continuation=" << num(n.continuation) << ";max_iter=" << n.max_iter
     << ";stride=" << n.feedback_stride << ";pos_tol=" << num(n.pos_tol_rel)
     << ";f0=" << cfg.dynamics.name << ";C=" << num(cfg.dynamics.lipschitz_const)
     << ";kernel=" << cfg.kernel.name << ";u1=" << cfg.u1.name
     << ";u1_sup=" << num(cfg.u1.u_sup) << ";u2=" << cfg.u2.name
     << ";u2_sup=" << num(cfg.u2.u_sup);
  os << ";a=";
  for (int j = 0; j < cfg.kernel.samples.size(); ++j) os << num(cfg.kernel.samples[j]) << ",";
  // probe the closures so that equally named but different callables hash apart
  os << ";probe=";
  for (double x : {0.0, 0.37, 1.0, 5.5, 42.0})
    for (double y : {-1.0, 0.0, 0.8, 13.0}) os << num(cfg.dynamics.f0(x, y)) << ",";
  for (double c : {0.0, 0.01, 0.5, 3.0}) os << num(cfg.u1.u(c)) << ",";
  for (double x : {0.01, 0.3, 1.0, 7.0}) os << num(cfg.u2.u(x)) << ",";
  return os.str();
}

std::uint64_t config_hash(const ProblemConfig& cfg) {
  const std::string s = config_descriptor(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

HistoryState HistoryState::constant(int n_hist, double value) {
  HistoryState s;
  s.eta0 = value;
  s.eta1 = Vector::Constant(n_hist, value);
  return s;
}

bool HistoryState::in_h_plus_plus() const {
  return eta0 > 0.0 && (eta1.size() == 0 || eta1.minCoeff() >= 0.0);
}

double HistoryState::at(double xi, double T) const {
  const int n = static_cast<int>(eta1.size());
  const double h = T / n;
  const double s = (xi + T) / h;
  if (s <= 0.0) return eta1[0];
  const int j = static_cast<int>(std::floor(s));
  if (j >= n) return eta0;
  const double w = s - j;
  const double right = (j + 1 < n) ? eta1[j + 1] : eta0;
  return (1.0 - w) * eta1[j] + w * right;
}

void check_history(const ProblemConfig& cfg, const HistoryState& eta) {
  if (eta.eta1.size() != cfg.numerics.n_hist)
    throw Error(ErrorCode::ConfigMismatch,
                "history has " + std::to_string(eta.eta1.size()) + " samples, grid expects " +
                    std::to_string(cfg.numerics.n_hist));
  if (!std::isfinite(eta.eta0) || !eta.eta1.allFinite())
    throw Error(ErrorCode::NonFiniteState, "history contains non-finite samples");
}

bool ValidationReport::passed() const { return passed("base"); }

bool ValidationReport::passed(const std::string& scope) const {
  for (const auto& c : checks)
    if (!c.passed && (c.scope == "base" || c.scope == scope)) return false;
  return true;
}

const HypothesisCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::vector<std::string> ValidationReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.passed) out.push_back(c.name + " [" + c.scope + "]: " + c.witness);
  return out;
}

ValidationReport validate_config(const ProblemConfig& cfg) {
  ValidationReport rep;
  auto add = [&](std::string name, std::string scope, bool ok, std::string witness) {
    rep.checks.push_back({std::move(name), std::move(scope), ok, ok ? "" : std::move(witness)});
  };

  add("rho>0", "base", cfg.rho > 0.0, "rho=" + num(cfg.rho));
  add("T>0", "base", cfg.T > 0.0, "T=" + num(cfg.T));
  const int N = cfg.numerics.n_hist;
  bool grid_ok = N >= 2 && cfg.numerics.substeps >= 1;
  if (cfg.delay == DelayKind::Pointwise) grid_ok = grid_ok && N % 2 == 0;
  add("grid", "base", grid_ok, "n_hist=" + std::to_string(N));

  // f0 sample set
  std::vector<double> xs{0.0};
  for (double v : log_grid(1e-3, 1e3, 99)) xs.push_back(v);
  std::vector<double> ys{0.0};
  for (double v : log_grid(1e-3, 1e3, 49)) {
    ys.push_back(v);
    ys.push_back(-v);
  }
  std::sort(ys.begin(), ys.end());
  const auto& f = cfg.dynamics.f0;
  std::mt19937_64 rng(0x5eed);
  std::uniform_int_distribution<std::size_t> ix(0, xs.size() - 1), iy(0, ys.size() - 1);

  {
    bool ok = true;
    std::string w;
    for (int k = 0; k < 400 && ok; ++k) {
      const double px = xs[ix(rng)], py = ys[iy(rng)], qx = xs[ix(rng)], qy = ys[iy(rng)];
      const double fp = f(px, py), fq = f(qx, qy);
      for (double lam : {0.25, 0.5, 0.75}) {
        const double mx = lam * px + (1 - lam) * qx, my = lam * py + (1 - lam) * qy;
        const double lhs = f(mx, my), rhs = lam * fp + (1 - lam) * fq;
        const double tol = 1e-10 * (1.0 + std::abs(fp) + std::abs(fq));
        if (lhs < rhs - tol) {
          ok = false;
          w = "p=" + point(px, py) + " q=" + point(qx, qy) + " lambda=" + num(lam);
          break;
        }
      }
    }
    add("f0 joint concavity", "base", ok, w);
  }
  {
    bool ok = true;
    std::string w;
    for (std::size_t i = 0; i < xs.size() && ok; i += 7)
      for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
        const double a = f(xs[i], ys[j]), b = f(xs[i], ys[j + 1]);
        if (a > b + 1e-12 * (1.0 + std::abs(a))) {
          ok = false;
          w = "x=" + num(xs[i]) + " y=" + num(ys[j]);
          break;
        }
      }
    add("f0 nondecreasing in y", "base", ok, w);
  }
  {
    const double C = cfg.dynamics.lipschitz_const;
    bool ok = C > 0.0 && std::isfinite(C);
    std::string w = ok ? "" : "C=" + num(C);
    for (int k = 0; k < 400 && ok; ++k) {
      const double px = xs[ix(rng)], py = ys[iy(rng)], qx = xs[ix(rng)], qy = ys[iy(rng)];
      const double d = std::abs(f(px, py) - f(qx, qy));
      const double bound = C * (std::abs(px - qx) + std::abs(py - qy));
      if (d > bound * (1 + 1e-10) + 1e-12) {
        ok = false;
        w = "p=" + point(px, py) + " q=" + point(qx, qy);
      }
    }
    add("f0 Lipschitz", "base", ok, w);
  }
  {
    bool ok = true;
    std::string w;
    for (double y : log_grid(1e-6, 1e3, 100))
      if (!(f(0.0, y) > 0.0)) {
        ok = false;
        w = "y=" + num(y);
        break;
      }
    add("f0(0,y)>0", "base", ok, w);
  }

  // kernel
  const Vector& a = cfg.kernel.samples;
  const double h = cfg.hist_step();
  if (cfg.delay == DelayKind::Distributed) {
    add("kernel grid", "base", a.size() == N + 1,
        "samples=" + std::to_string(a.size()) + " expected " + std::to_string(N + 1));
    if (a.size() == N + 1) {
      add("a(-T)=0", "base", a[0] == 0.0, "a(-T)=" + num(a[0]));
      add("a>=0", "base", a.minCoeff() >= 0.0, "min a=" + num(a.minCoeff()));
      bool ok = true;
      std::string w;
      for (int div : {8, 4, 2}) {
        const int from = N - N / div;
        if (!(trapezoid_mass(a, h, from) > 0.0)) {
          ok = false;
          w = "eps=T/" + std::to_string(div);
        }
      }
      add("kernel mass near 0", "closed-loop", ok, w);
    }
  } else {
    add("kernel mass near 0", "closed-loop", false, "pointwise delay carries no mass near 0");
  }

  // U1
  {
    const auto& U = cfg.u1;
    const auto cs = log_grid(1e-6, 1e6, 100);
    bool inc = true, conc = true, dec = true, bnd = std::isfinite(U.u_sup);
    std::string wi, wc, wd, wb = bnd ? "" : "u_sup=" + num(U.u_sup);
    double prev_slope = kInf;
    for (std::size_t i = 0; i + 1 < cs.size(); ++i) {
      const double a0 = U.u(cs[i]), a1 = U.u(cs[i + 1]);
      if (!(a1 > a0) && inc) {
        inc = false;
        wi = "c=" + num(cs[i]);
      }
      const double slope = (a1 - a0) / (cs[i + 1] - cs[i]);
      if (!(slope < prev_slope) && conc) {
        conc = false;
        wc = "c=" + num(cs[i]);
      }
      prev_slope = slope;
      if (!(U.u_prime(cs[i + 1]) <= U.u_prime(cs[i])) && dec) {
        dec = false;
        wd = "c=" + num(cs[i]);
      }
      if (bnd && a0 > U.u_sup) {
        bnd = false;
        wb = "c=" + num(cs[i]);
      }
    }
    add("U1 strictly increasing", "base", inc, wi);
    add("U1 strictly concave", "base", conc, wc);
    add("U1' decreasing", "base", dec, wd);
    add("U1 bounded", "base", bnd, wb);
    add("U1'(0+)=inf", "base", U.u_prime(1e-8) > 1e3, "U1'(1e-8)=" + num(U.u_prime(1e-8)));
  }

  // U2
  {
    const auto& U = cfg.u2;
    const auto xs2 = log_grid(1e-6, 1e6, 100);
    bool inc = true, conc = true, bnd = true;
    std::string wi, wc, wb;
    double prev_slope = kInf;
    for (std::size_t i = 0; i + 1 < xs2.size(); ++i) {
      const double a0 = U.u(xs2[i]), a1 = U.u(xs2[i + 1]);
      const double tol = 1e-10 * (1.0 + std::abs(a0) + std::abs(a1));
      if (a1 < a0 - tol && inc) {
        inc = false;
        wi = "x=" + num(xs2[i]);
      }
      const double slope = (a1 - a0) / (xs2[i + 1] - xs2[i]);
      if (slope > prev_slope + 1e-10 * (1.0 + std::abs(prev_slope)) && conc) {
        conc = false;
        wc = "x=" + num(xs2[i]);
      }
      prev_slope = slope;
      if (a0 > U.u_sup + 1e-12 && bnd) {
        bnd = false;
        wb = "x=" + num(xs2[i]);
      }
    }
    add("U2 nondecreasing", "base", inc, wi);
    add("U2 concave", "base", conc, wc);
    add("U2 bounded", "base", bnd && std::isfinite(U.u_sup), wb);

    // integrability of e^{-rho t} U2(e^{-C t}) judged by the decay rate of the integrand
    {
      const double C = cfg.dynamics.lipschitz_const;
      auto g = [&](double t) { return std::exp(-cfg.rho * t) * U.u(std::exp(-C * t)); };
      const double t1 = 20.0 / cfg.rho, t2 = 40.0 / cfg.rho;
      const double g1 = g(t1), g2 = g(t2);
      bool ok;
      std::string w;
      if (g2 == 0.0) {
        ok = true;
      } else if (!std::isfinite(g1) || !std::isfinite(g2) || g1 == 0.0) {
        ok = false;
        w = "integrand not finite";
      } else {
        const double lam = std::log(std::abs(g1 / g2)) / (t2 - t1);
        ok = lam > 1e-3 * cfg.rho;
        w = "decay rate " + num(lam);
      }
      add("U2 discounted integrability", "base", ok, w);
    }

    if (U.nonintegrable_at_zero) {
      // trapezoid integral of U2 over [delta, 1] on a log grid
      auto integral = [&](double delta) {
        const auto g = log_grid(delta, 1.0, 2000);
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < g.size(); ++i)
          s += 0.5 * (g[i + 1] - g[i]) * (U.u(g[i]) + U.u(g[i + 1]));
        return s;
      };
      const double i2 = integral(1e-2), i4 = integral(1e-4), i6 = integral(1e-6);
      const double d1 = i2 - i4, d2 = i4 - i6;
      // diverging past -1e3, or decrements that do not decay (logarithmic divergence)
      const bool ok = i6 < -1e3 || (d1 > 0.0 && d2 >= 0.5 * d1);
      add("U2 nonintegrable at 0+", "base", ok,
          "I(1e-2)=" + num(i2) + " I(1e-4)=" + num(i4) + " I(1e-6)=" + num(i6));
    }
    if (U.strong_blowup) {
      bool ok = false, mono = true;
      double prev = kInf;
      std::string w;
      for (double x : {1e-6, 1e-9, 1e-12}) {
        const double v = x * U.u(x);
        if (v < -1e3) ok = true;
        if (!(v < prev)) mono = false;
        prev = v;
        w += "x*U2(" + num(x) + ")=" + num(v) + " ";
      }
      add("U2 strong blow-up", "base", ok && mono, w);
    }
  }

  add("U2 nonintegrable (closed loop)", "closed-loop", cfg.u2.nonintegrable_at_zero,
      "U2 integrable at 0+");

  {
    bool ok = true;
    std::string w;
    for (double x : xs)
      if (cfg.r * x + f(x, 0.0) < -1e-12) {
        ok = false;
        w = "x=" + num(x);
        break;
      }
    add("rx+f0(x,0)>=0", "approximation", ok, w);
  }
  return rep;
}

namespace {

// -delta log(1 + e^{-g/delta}): smooth minorant of min(0, g), off by at most delta log 2
double soft_min0(double g, double delta) {
  if (g < 0.0) return g - delta * std::log1p(std::exp(g / delta));
  return -delta * std::log1p(std::exp(-g / delta));
}

double soft_min0_slope(double g, double delta) {
  if (g < 0.0) return 1.0 / (1.0 + std::exp(g / delta));
  const double e = std::exp(-g / delta);
  return e / (1.0 + e);
}

}  // namespace

DynamicsSpec saturating_dynamics(double alpha, double cap, double beta) {
  DynamicsSpec d;
  d.name = "saturating(" + num(alpha) + "," + num(cap) + "," + num(beta) + ")";
  d.f0 = [=](double x, double y) { return alpha * std::min(std::max(x, 0.0), cap) + beta * y; };
  d.grad = [=](double x, double) -> std::array<double, 2> {
    return {(x >= 0.0 && x < cap) ? alpha : 0.0, beta};
  };
  d.lipschitz_const = std::abs(alpha) + std::abs(beta);
  d.smoothed = [=](double delta) {
    DynamicsSpec s = saturating_dynamics(alpha, cap, beta);
    s.name += "~" + num(delta);
    s.f0 = [=](double x, double y) {
      return alpha * (cap + soft_min0(std::max(x, 0.0) - cap, delta)) + beta * y;
    };
    s.grad = [=](double x, double) -> std::array<double, 2> {
      return {x >= 0.0 ? alpha * soft_min0_slope(x - cap, delta) : 0.0, beta};
    };
    s.smoothed = nullptr;
    return s;
  };
  return d;
}

DynamicsSpec smooth_saturating_dynamics(double alpha, double s, double beta) {
  DynamicsSpec d;
  d.name = "smooth(" + num(alpha) + "," + num(s) + "," + num(beta) + ")";
  d.f0 = [=](double x, double y) {
    const double xp = std::max(x, 0.0);
    return alpha * xp / (1.0 + s * xp) + beta * y;
  };
  d.grad = [=](double x, double) -> std::array<double, 2> {
    if (x < 0.0) return {0.0, beta};
    const double q = 1.0 + s * x;
    return {alpha / (q * q), beta};
  };
  d.lipschitz_const = std::abs(alpha) + std::abs(beta);
  return d;
}

DynamicsSpec linear_dynamics(double alpha, double beta) {
  DynamicsSpec d;
  d.name = "linear(" + num(alpha) + "," + num(beta) + ")";
  d.f0 = [=](double x, double y) { return alpha * x + beta * y; };
  d.grad = [=](double, double) -> std::array<double, 2> { return {alpha, beta}; };
  d.lipschitz_const = std::abs(alpha) + std::abs(beta);
  return d;
}

KernelSpec ramp_kernel(double T, int n_hist) {
  KernelSpec k;
  k.name = "ramp";
  k.family = "ramp";
  k.samples.resize(n_hist + 1);
  const double h = T / n_hist;
  for (int j = 0; j <= n_hist; ++j) k.samples[j] = 2.0 * (j * h) / (T * T);
  k.samples[0] = 0.0;
  k.derivative_bound = discrete_derivative_norm(k.samples, h);
  return k;
}

KernelSpec uniform_kernel(double T, int n_hist) {
  KernelSpec k;
  k.name = "uniform";
  k.family = "uniform";
  k.samples = Vector::Constant(n_hist + 1, 1.0 / T);
  k.derivative_bound = 0.0;
  return k;
}

KernelSpec mollified_kernel(double T, int n_hist, int kidx) {
  if (kidx < 1) throw Error(ErrorCode::InvalidArgument, "kernel index must be >= 1");
  KernelSpec k;
  k.name = "gaussian(" + std::to_string(kidx) + ")";
  k.family = "gaussian";
  k.param = kidx;
  const double h = T / n_hist;
  const double sigma = T / (4.0 * kidx);
  Vector a(n_hist + 1);
  for (int j = 0; j <= n_hist; ++j) {
    const double xi = -T + j * h;
    const double z = (xi + 0.5 * T) / sigma;
    const double fade = std::min(1.0, (xi + T) / (0.25 * T));
    double v = std::exp(-0.5 * z * z) * fade;
    if (xi > -T / 8.0 - 1e-12 * T) v = std::max(v, 1e-12);
    a[j] = v;
  }
  a[0] = 0.0;
  a /= trapezoid_mass(a, h, 0);
  a[0] = 0.0;
  k.samples = a;
  k.derivative_bound = discrete_derivative_norm(a, h);
  return k;
}

KernelSpec kernel_by_family(const std::string& family, double T, int n_hist, int param) {
  if (family == "ramp") return ramp_kernel(T, n_hist);
  if (family == "uniform") return uniform_kernel(T, n_hist);
  if (family == "gaussian") return mollified_kernel(T, n_hist, param);
  throw Error(ErrorCode::ConfigMismatch, "unknown kernel family '" + family + "'");
}

UtilitySpec power_ratio_utility(double gamma) {
  UtilitySpec u;
  u.name = "power_ratio(" + num(gamma) + ")";
  u.u = [=](double c) {
    const double p = std::pow(std::max(c, 0.0), gamma);
    return p / (1.0 + p);
  };
  u.u_prime = [=](double c) {
    if (c <= 0.0) return kInf;
    const double p = std::pow(c, gamma);
    return gamma * p / c / ((1.0 + p) * (1.0 + p));
  };
  u.u_second = [=](double c) {
    if (c <= 0.0) return -kInf;
    const double p = std::pow(c, gamma);
    const double dp = gamma * p / c, d2p = gamma * (gamma - 1.0) * p / (c * c);
    const double q = 1.0 + p;
    return -2.0 * dp * dp / (q * q * q) + d2p / (q * q);
  };
  u.u_sup = 1.0;
  return u;
}

UtilitySpec linear_utility() {
  UtilitySpec u;
  u.name = "linear";
  u.u = [](double c) { return c; };
  u.u_prime = [](double) { return 1.0; };
  u.u_second = [](double) { return 0.0; };
  u.u_sup = kInf;
  return u;
}

StateUtilitySpec zero_state_utility() {
  StateUtilitySpec u;
  u.name = "zero";
  u.u = [](double) { return 0.0; };
  u.u_prime = [](double) { return 0.0; };
  u.u_sup = 0.0;
  u.zero = true;
  return u;
}

StateUtilitySpec inverse_state_utility(double n) {
  StateUtilitySpec u;
  u.name = "inverse(" + num(n) + ")";
  u.u = [=](double x) {
    if (x <= 0.0) return -kInf;
    return std::min(0.0, 1.0 - 1.0 / (n * x));
  };
  u.u_prime = [=](double x) {
    if (x <= 0.0) return kInf;
    return x < 1.0 / n ? 1.0 / (n * x * x) : 0.0;
  };
  u.u_sup = 0.0;
  u.nonintegrable_at_zero = true;
  u.smoothed = [=](double delta) {
    StateUtilitySpec s = inverse_state_utility(n);
    s.name += "~" + num(delta);
    s.u = [=](double x) { return x <= 0.0 ? -kInf : soft_min0(1.0 - 1.0 / (n * x), delta); };
    s.u_prime = [=](double x) {
      return x <= 0.0 ? kInf : soft_min0_slope(1.0 - 1.0 / (n * x), delta) / (n * x * x);
    };
    s.smoothed = nullptr;
    return s;
  };
  return u;
}

StateUtilitySpec inverse_square_state_utility(double n) {
  StateUtilitySpec u;
  u.name = "inverse_square(" + num(n) + ")";
  u.u = [=](double x) {
    if (x <= 0.0) return -kInf;
    const double q = 1.0 / (n * x);
    return std::min(0.0, 1.0 - q * q);
  };
  u.u_prime = [=](double x) {
    if (x <= 0.0) return kInf;
    return x < 1.0 / n ? 2.0 / (n * n * x * x * x) : 0.0;
  };
  u.u_sup = 0.0;
  u.nonintegrable_at_zero = true;
  u.strong_blowup = true;
  u.smoothed = [=](double delta) {
    StateUtilitySpec s = inverse_square_state_utility(n);
    s.name += "~" + num(delta);
    s.u = [=](double x) {
      if (x <= 0.0) return -kInf;
      const double q = 1.0 / (n * x);
      return soft_min0(1.0 - q * q, delta);
    };
    s.u_prime = [=](double x) {
      if (x <= 0.0) return kInf;
      const double q = 1.0 / (n * x);
      return soft_min0_slope(1.0 - q * q, delta) * 2.0 * q * q / x;
    };
    s.smoothed = nullptr;
    return s;
  };
  return u;
}

std::vector<ProblemConfig> builtin_catalog(const Numerics& numerics) {
  std::vector<ProblemConfig> out;
  const int N = numerics.n_hist;
  {
    ProblemConfig c;
    c.name = "saturating-production";
    c.r = 0.05;
    c.rho = 1.0;
    c.T = 1.0;
    c.dynamics = saturating_dynamics(0.5, 10.0, 0.3);
    c.kernel = ramp_kernel(c.T, N);
    c.u1 = power_ratio_utility(0.5);
    c.u2 = inverse_state_utility(1.0);
    c.numerics = numerics;
    out.push_back(c);
  }
  {
    ProblemConfig c;
    c.name = "zero-state-utility";
    c.r = 0.05;
    c.rho = 1.0;
    c.T = 1.0;
    c.dynamics = smooth_saturating_dynamics(0.25, 0.1, 0.1);
    c.kernel = ramp_kernel(c.T, N);
    c.u1 = power_ratio_utility(0.5);
    c.u2 = zero_state_utility();
    c.numerics = numerics;
    out.push_back(c);
  }
  {
    ProblemConfig c;
    c.name = "strong-blowup";
    c.r = 0.05;
    c.rho = 1.0;
    c.T = 1.0;
    c.dynamics = smooth_saturating_dynamics(0.25, 0.1, 0.1);
    c.kernel = ramp_kernel(c.T, N);
    c.u1 = power_ratio_utility(0.5);
    c.u2 = inverse_square_state_utility(1.0);
    c.numerics = numerics;
    out.push_back(c);
  }
  return out;
}

ProblemConfig preset(const std::string& name, const Numerics& numerics) {
  for (auto& c : builtin_catalog(numerics))
    if (c.name == name) return c;
  throw Error(ErrorCode::UnknownPreset, "unknown preset '" + name + "'");
}

void regrid(ProblemConfig& cfg, int n_hist, int substeps) {
  cfg.numerics.n_hist = n_hist;
  cfg.numerics.substeps = substeps;
  if (cfg.kernel.family == "custom") {
    if (cfg.kernel.samples.size() != n_hist + 1)
      throw Error(ErrorCode::ConfigMismatch, "custom kernel cannot be regridded");
    return;
  }
  cfg.kernel = kernel_by_family(cfg.kernel.family, cfg.T, n_hist, cfg.kernel.param);
}

}  // namespace ddeopt
