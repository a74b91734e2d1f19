#include "ddeopt/feedback_synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>

#include "ddeopt/detail/scheme.hpp"
#include "ddeopt/hamiltonian.hpp"

namespace ddeopt {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t bits(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof u);
  return u;
}

std::string state_key(const HistoryState& eta) {
  std::string key = hex64(bits(eta.eta0));
  key.reserve(16 * (eta.eta1.size() + 1));
  for (Eigen::Index j = 0; j < eta.eta1.size(); ++j) key += hex64(bits(eta.eta1[j]));
  return key;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

struct FeedbackPolicy::Impl {
  struct Entry {
    double slope = 0.0;
    Vector knots;
  };

  bool constant = false;
  double const_price = 0.0;
  FeedbackOptions opts;
  std::uint64_t hash = 0;
  std::string file;

  mutable std::shared_mutex mu;
  std::map<std::string, Entry> cache;
  std::optional<Vector> warm;
  std::atomic<std::uint64_t> hits{0}, misses{0}, loaded{0}, evaluations{0};

  void load() {
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string key;
      Entry e;
      int n = 0;
      if (!(ls >> key >> e.slope >> n) || n < 0) continue;
      e.knots.resize(n);
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) ok = static_cast<bool>(ls >> e.knots[i]);
      if (!ok) continue;
      cache[key] = e;
      ++loaded;
    }
  }
};

FeedbackPolicy::FeedbackPolicy(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
FeedbackPolicy::FeedbackPolicy(FeedbackPolicy&&) noexcept = default;
FeedbackPolicy& FeedbackPolicy::operator=(FeedbackPolicy&&) noexcept = default;
FeedbackPolicy::~FeedbackPolicy() = default;

FeedbackPolicy FeedbackPolicy::live(const ProblemConfig& cfg, FeedbackOptions opts) {
  auto impl = std::make_unique<Impl>();
  impl->opts = std::move(opts);
  std::uint64_t h = config_hash(cfg);
  h = mix(h, bits(impl->opts.h));
  h = mix(h, bits(impl->opts.value.horizon));
  h = mix(h, static_cast<std::uint64_t>(impl->opts.value.knots));
  impl->hash = config_hash(cfg);
  std::string dir = impl->opts.cache_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("DDEOPT_CACHE_DIR")) dir = env;
  }
  if (!dir.empty()) {
    impl->file = (std::filesystem::path(dir) / (hex64(h) + ".slopes")).string();
    impl->load();
  }
  return FeedbackPolicy(std::move(impl));
}

FeedbackPolicy FeedbackPolicy::constant_price(double price) {
  if (!(price > 0.0)) throw Error(ErrorCode::GradientFailure, "constant price must be positive");
  auto impl = std::make_unique<Impl>();
  impl->constant = true;
  impl->const_price = price;
  return FeedbackPolicy(std::move(impl));
}

bool FeedbackPolicy::is_constant() const { return impl_->constant; }
double FeedbackPolicy::scale() const { return impl_->opts.scale; }

CacheStats FeedbackPolicy::stats() const {
  CacheStats s;
  s.hits = impl_->hits;
  s.misses = impl_->misses;
  s.disk_loaded = impl_->loaded;
  s.evaluations = impl_->evaluations;
  return s;
}

double FeedbackPolicy::price(const ProblemConfig& cfg, const HistoryState& eta) {
  Impl& im = *impl_;
  if (im.constant) return im.const_price * im.opts.scale;
  if (config_hash(cfg) != im.hash)
    throw Error(ErrorCode::ConfigMismatch, "policy was built for a different configuration");
  const std::string key = state_key(eta);
  {
    std::shared_lock lock(im.mu);
    auto it = im.cache.find(key);
    if (it != im.cache.end()) {
      ++im.hits;
      const double s = it->second.slope;
      lock.unlock();
      std::unique_lock wl(im.mu);
      im.warm = im.cache[key].knots;
      return s * im.opts.scale;
    }
  }
  ++im.misses;
  if (!domain_probe(cfg, eta).in_domain)
    throw Error(ErrorCode::OutOfDomain, "feedback requested outside the domain of V");
  ValueOptions vo = im.opts.value;
  {
    std::shared_lock lock(im.mu);
    vo.warm_start = im.warm;
  }
  const SlopeEstimate s = slope_eta0(cfg, eta, im.opts.h, vo);
  ++im.evaluations;
  if (!(s.central > 0.0) || !std::isfinite(s.central))
    throw Error(ErrorCode::GradientFailure,
                "V_eta0 estimate " + std::to_string(s.central) + " is not positive");
  std::unique_lock wl(im.mu);
  im.cache[key] = Impl::Entry{s.central, s.center.knots};
  im.warm = s.center.knots;
  return s.central * im.opts.scale;
}

void FeedbackPolicy::flush() const {
  const Impl& im = *impl_;
  if (im.constant || im.file.empty()) return;
  std::shared_lock lock(im.mu);
  std::filesystem::create_directories(std::filesystem::path(im.file).parent_path());
  std::ofstream out(im.file, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write cache file " + im.file);
  char buf[32];
  for (const auto& [key, e] : im.cache) {
    out << key;
    std::snprintf(buf, sizeof buf, " %.17g %d", e.slope, static_cast<int>(e.knots.size()));
    out << buf;
    for (Eigen::Index i = 0; i < e.knots.size(); ++i) {
      std::snprintf(buf, sizeof buf, " %.17g", e.knots[i]);
      out << buf;
    }
    out << '\n';
  }
}

double feedback_control(FeedbackPolicy& policy, const ProblemConfig& cfg, const HistoryState& eta) {
  const double p = policy.price(cfg, eta);
  if (!(p > 0.0)) throw Error(ErrorCode::GradientFailure, "price must be positive");
  return legendre(cfg.u1, p).c_star;
}

ClosedLoop closed_loop_solve(FeedbackPolicy& policy, const ProblemConfig& cfg,
                             const HistoryState& eta, double horizon, int stride) {
  check_history(cfg, eta);
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  if (stride <= 0) stride = cfg.numerics.feedback_stride;
  const int S = detail::step_count(cfg, horizon);
  const double dt = cfg.state_step();
  const double tol = cfg.pos_tol(eta.eta0);
  detail::Scheme<double> sch(cfg, detail::make_stencil(cfg));
  sch.start(eta.eta1, eta.eta0, S);

  ClosedLoop out;
  out.stride = stride;
  out.control.dt = dt;
  out.control.values.resize(S);
  out.prices.resize(S);

  auto control_of = [&](double p) {
    if (!(p > 0.0)) throw Error(ErrorCode::GradientFailure, "price must be positive");
    return legendre(cfg.u1, p).c_star;
  };
  auto check = [&](int i) {
    const double x = sch.at_step(i);
    if (!(x > tol)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "closed-loop state %.6g at t=%.6g", x, i * dt);
      throw Error(ErrorCode::PositivityLoss, buf);
    }
  };

  if (!domain_probe(cfg, eta).in_domain)
    throw Error(ErrorCode::OutOfDomain, "initial state is outside the domain of V");
  double p_start = policy.price(cfg, sch.window(0));
  out.realized_prices.push_back(p_start);
  for (int b = 0; b < S; b += stride) {
    const int len = std::min(stride, S - b);
    double p_end = p_start;
    if (len > 1) {
      // predictor: hold the block-start price, then price the predicted block end
      const double c0 = control_of(p_start);
      bool ok = true;
      for (int j = 0; j < len && ok; ++j) {
        sch.step(c0);
        ok = sch.at_step(b + j + 1) > tol;
      }
      if (ok && domain_probe(cfg, sch.window(b + len)).in_domain)
        p_end = policy.price(cfg, sch.window(b + len));
      sch.truncate(b);
    }
    for (int j = 0; j < len; ++j) {
      const double p = p_start + (p_end - p_start) * static_cast<double>(j) / len;
      const double c = control_of(p);
      out.prices[b + j] = p;
      out.control.values[b + j] = c;
      sch.step(c);
      check(b + j + 1);
    }
    if (b + len < S) {
      const double p_next = policy.price(cfg, sch.window(b + len));
      if (len > 1) out.schedule_error.push_back(std::abs(p_end - p_next));
      out.realized_prices.push_back(p_next);
      p_start = p_next;
    }
  }
  out.trajectory = integrate(cfg, eta, out.control, horizon);
  return out;
}

double hamiltonian_deficit(const ProblemConfig& cfg, const ClosedLoop& loop) {
  double sched = 0.0;
  const double dt = loop.control.dt;
  const int S = static_cast<int>(loop.control.values.size());
  const int B = static_cast<int>(loop.realized_prices.size());
  for (int k = 0; k < B; ++k) {
    const int b = k * loop.stride;
    const int len = std::min(loop.stride, S - b);
    const double p0 = loop.realized_prices[k];
    const double p1 = k + 1 < B ? loop.realized_prices[k + 1] : p0;
    for (int j = 0; j < len; ++j) {
      const double p = p0 + (p1 - p0) * static_cast<double>(j) / len;
      const double c = loop.control.values[b + j];
      const double deficit = legendre(cfg.u1, p).h - (cfg.u1.u(c) - p * c);
      sched += std::exp(-cfg.rho * (b + j) * dt) * dt * std::max(deficit, 0.0);
    }
  }
  return sched;
}

VerificationReport verify_control(const ProblemConfig& cfg, const HistoryState& eta,
                                  const ClosedLoop& loop, double horizon) {
  VerificationReport rep;
  rep.horizon = horizon;
  const ValueEstimate V = estimate_value(cfg, eta);
  if (!V.in_domain) throw Error(ErrorCode::OutOfDomain, "state is outside the domain of V");
  const Payoff J = objective(cfg, eta, loop.control, horizon, TailPolicy::ZeroControlContinuation);
  rep.value_estimate = V.value;
  rep.feedback_payoff = J.total();
  rep.gap = rep.value_estimate - rep.feedback_payoff;
  rep.min_state = J.min_state;
  rep.estimator_tolerance = V.tolerance;

  // the realized control is followed by c = 0; the optimal continuation can
  // gain at most this much over it
  const double trunc = std::exp(-cfg.rho * horizon) * (cfg.u1.u_sup - cfg.u1.u(0.0)) / cfg.rho +
                       (std::isfinite(J.tail_gap) ? J.tail_gap : 0.0);
  const double sched = hamiltonian_deficit(cfg, loop);
  rep.items = {{"estimator_tolerance", V.tolerance},
               {"value_tail_gap", V.tail_gap},
               {"truncation", trunc},
               {"gradient_step", sched}};
  for (const auto& it : rep.items) rep.budget += it.value;
  rep.upper_ok = rep.feedback_payoff <= rep.value_estimate + rep.estimator_tolerance;
  rep.pass = rep.feedback_payoff >= rep.value_estimate - rep.budget;
  return rep;
}

VerificationReport verify_optimality(FeedbackPolicy& policy, const ProblemConfig& cfg,
                                     const HistoryState& eta, double horizon, int stride) {
  const ClosedLoop loop = closed_loop_solve(policy, cfg, eta, horizon, stride);
  return verify_control(cfg, eta, loop, horizon);
}

std::string to_text(const VerificationReport& rep) {
  std::ostringstream os;
  os.precision(12);
  os << "value_estimate: " << rep.value_estimate << '\n'
     << "feedback_payoff: " << rep.feedback_payoff << '\n'
     << "gap: " << rep.gap << '\n'
     << "budget: " << rep.budget << '\n';
  for (const auto& it : rep.items) os << "  " << it.name << ": " << it.value << '\n';
  os << "horizon: " << rep.horizon << '\n'
     << "min_state: " << rep.min_state << '\n'
     << "upper_ok: " << (rep.upper_ok ? "true" : "false") << '\n'
     << "pass: " << (rep.pass ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace ddeopt
