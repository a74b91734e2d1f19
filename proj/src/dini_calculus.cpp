#include "ddeopt/dini_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

namespace ddeopt {

namespace {

enum class Side { Left, Right };

template <class Pick>
double dini(const SampledFunction& f, double t, const std::vector<double>& scales, Side side,
            double init, Pick pick) {
  if (scales.empty()) throw Error(ErrorCode::InvalidArgument, "empty scale ladder");
  const double lo = f.alpha, hi = f.beta;
  if (side == Side::Left ? !(t > lo && t <= hi) : !(t >= lo && t < hi))
    throw Error(ErrorCode::OutOfRange, "Dini derivative requested outside the interval");
  double out = init;
  const double ft = f(t);
  for (double h : scales) {
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "scales must be positive");
    const double s = side == Side::Left ? t - h : t + h;
    if (s < lo || s > hi)
      throw Error(ErrorCode::OutOfRange, "scale " + std::to_string(h) + " leaves the interval");
    out = pick(out, side == Side::Left ? (ft - f(s)) / h : (f(s) - ft) / h);
  }
  return out;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

double mn(double a, double b) { return std::min(a, b); }
double mx(double a, double b) { return std::max(a, b); }

}  // namespace

SampledFunction SampledFunction::sample(std::function<double(double)> g, double alpha,
                                        double beta, int intervals, bool keep_exact) {
  if (!(beta > alpha) || intervals < 1)
    throw Error(ErrorCode::InvalidArgument, "need alpha < beta and at least one interval");
  SampledFunction f;
  f.alpha = alpha;
  f.beta = beta;
  f.values.resize(intervals + 1);
  for (int i = 0; i <= intervals; ++i) {
    const double v = g(i == intervals ? beta : alpha + i * (beta - alpha) / intervals);
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteState, "sampled value is not finite");
    f.values[i] = v;
  }
  if (keep_exact) f.exact = std::move(g);
  return f;
}

double SampledFunction::operator()(double t) const {
  if (exact) return exact(t);
  const int n = intervals();
  const double u = std::clamp((t - alpha) / step(), 0.0, static_cast<double>(n));
  const int i = std::min(static_cast<int>(u), n - 1);
  const double w = u - i;
  return (1.0 - w) * values[i] + w * values[i + 1];
}

std::vector<double> default_scales() {
  std::vector<double> s;
  for (int j = 4; j <= 20; ++j) s.push_back(std::ldexp(1.0, -j));
  return s;
}

double dini_upper_right(const SampledFunction& f, double t, const std::vector<double>& scales) {
  return dini(f, t, scales, Side::Right, -kInf, mx);
}
double dini_lower_right(const SampledFunction& f, double t, const std::vector<double>& scales) {
  return dini(f, t, scales, Side::Right, kInf, mn);
}
double dini_upper_left(const SampledFunction& f, double t, const std::vector<double>& scales) {
  return dini(f, t, scales, Side::Left, -kInf, mx);
}
double dini_lower_left(const SampledFunction& f, double t, const std::vector<double>& scales) {
  return dini(f, t, scales, Side::Left, kInf, mn);
}

std::pair<double, double> quotient_bounds(const SampledFunction& f) {
  // over a piecewise linear interpolant the extreme quotients are between neighbours
  double lo = kInf, hi = -kInf;
  const double h = f.step();
  for (int i = 0; i < f.intervals(); ++i) {
    const double q = (f.values[i + 1] - f.values[i]) / h;
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  return {lo, hi};
}

FtcReport generalized_ftc_check(const SampledFunction& g, const SampledFunction& mu,
                                const std::vector<double>& scales, double tol) {
  if (g.values.size() != mu.values.size() || g.alpha != mu.alpha || g.beta != mu.beta)
    throw Error(ErrorCode::ConfigMismatch, "g and mu must share the grid");
  FtcReport r;
  r.tolerance = tol;
  for (int i = 1; i <= g.intervals(); ++i) {
    const double t = g.node(i);
    std::vector<double> fit;
    for (double h : scales)
      if (t - h >= g.alpha) fit.push_back(h);
    if (fit.empty()) continue;
    if (dini_lower_left(g, t, fit) < mu.values[i] - tol) {
      r.premise_holds = false;
      r.premise_failures.push_back(t);
    }
  }
  r.lhs = g.values[g.intervals()] - g.values[0];
  const double h = mu.step();
  double s = 0.0;
  for (int i = 0; i < mu.intervals(); ++i) s += 0.5 * h * (mu.values[i] + mu.values[i + 1]);
  r.rhs = s;
  r.conclusion_holds = r.lhs >= r.rhs - tol;
  return r;
}

double cantor_function(double x, int depth) {
  if (depth < 1 || depth > 40) throw Error(ErrorCode::InvalidArgument, "depth must be in [1, 40]");
  if (!(x > 0.0)) return 0.0;
  if (x >= 1.0) return 1.0;
  // The coarsest triadic rational m / 3^j within the representation error of
  // x is taken as x itself; otherwise the digits of floor(x 3^depth) are used.
  long double p = 1.0L;
  std::uint64_t k = 0;
  int len = depth;
  for (int j = 1; j <= depth; ++j) {
    p *= 3.0L;
    const long double v = static_cast<long double>(x) * p;
    const long double r = std::nearbyint(v);
    if (std::fabs(v - r) <= p * 0x1p-52L || j == depth) {
      const long double kk = std::fabs(v - r) <= p * 0x1p-52L ? r : std::floor(v);
      if (kk >= p) return 1.0;
      k = static_cast<std::uint64_t>(kk);
      len = j;
      break;
    }
  }
  std::vector<int> digits(len);
  for (int d = len - 1; d >= 0; --d) {
    digits[d] = static_cast<int>(k % 3);
    k /= 3;
  }
  double out = 0.0, scale = 0.5;
  for (int dg : digits) {
    if (dg == 1) return out + scale;
    if (dg == 2) out += scale;
    scale *= 0.5;
  }
  return out;
}

bool monotonicity_check(const SampledFunction& g, double tol) {
  for (int i = 0; i < g.intervals(); ++i)
    if (g.values[i + 1] < g.values[i] - tol) return false;
  return true;
}

std::string to_text(const FtcReport& r) {
  std::ostringstream os;
  os.precision(12);
  os << "premise_holds: " << (r.premise_holds ? "true" : "false") << '\n'
     << "premise_failures: " << r.premise_failures.size() << '\n'
     << "lhs: " << r.lhs << '\n'
     << "rhs: " << r.rhs << '\n'
     << "conclusion_holds: " << (r.conclusion_holds ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace ddeopt
