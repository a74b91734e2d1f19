#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "ddeopt/core_model.hpp"
#include "ddeopt/delay_dynamics.hpp"

using namespace ddeopt;

namespace {

ProblemConfig linear_uniform(int n_hist, int substeps) {
  ProblemConfig cfg;
  cfg.name = "linear-uniform";
  cfg.r = 0.0;
  cfg.rho = 1.0;
  cfg.T = 1.0;
  cfg.dynamics = linear_dynamics(0.0, 1.0);
  cfg.numerics.n_hist = n_hist;
  cfg.numerics.substeps = substeps;
  cfg.kernel = uniform_kernel(cfg.T, n_hist);
  cfg.u1 = power_ratio_utility(0.5);
  cfg.u2 = zero_state_utility();
  return cfg;
}

HistoryState wavy(int n, double T, double base) {
  HistoryState h;
  h.eta0 = base;
  h.eta1.resize(n);
  for (int j = 0; j < n; ++j) {
    const double xi = -T + j * T / n;
    h.eta1[j] = base + 0.3 * std::sin(3.0 * xi);
  }
  return h;
}

}  // namespace

TEST_CASE("constant history with unit kernel mass starts with slope one") {
  for (int n : {16, 32, 64}) {
    auto cfg = linear_uniform(n, 1);
    const double dt = cfg.state_step();
    const auto tr = integrate(cfg, HistoryState::constant(n, 1.0), ControlPath{}, dt);
    CHECK(std::abs(tr.final_state() - (1.0 + dt)) < 4 * dt * dt);
  }
}

TEST_CASE("history and t=0 samples are reproduced") {
  auto cfg = preset("saturating-production");
  const auto eta = wavy(cfg.n_hist(), cfg.T, 2.0);
  const auto tr = integrate(cfg, eta, ControlPath::constant(cfg.state_step(), 10, 0.2), 1.0);
  for (int j = 0; j < cfg.n_hist(); ++j) CHECK(tr.values[j] == eta.eta1[j]);
  CHECK(tr.values[tr.history_points] == eta.eta0);
  CHECK(tr.time(tr.history_points) == doctest::Approx(0.0));
  CHECK(tr.steps() == 64);
  CHECK(tr.controls[9] == 0.2);
  CHECK(tr.controls[10] == 0.0);
}

TEST_CASE("linear uniform kernel matches Richardson reference") {
  // successive halving of the state step until answers agree to 1e-8
  double prev = 0.0, ref = 0.0;
  for (int m = 1; m <= 64; m *= 2) {
    auto cfg = linear_uniform(64, m);
    const double x1 = integrate(cfg, HistoryState::constant(64, 1.0), ControlPath{}, 1.0).final_state();
    if (m > 1 && std::abs(x1 - prev) < 1e-8) {
      ref = x1 + (x1 - prev) / 15.0;
      break;
    }
    prev = x1;
  }
  REQUIRE(ref != 0.0);
  auto cfg = linear_uniform(64, 1);
  const double x1 = integrate(cfg, HistoryState::constant(64, 1.0), ControlPath{}, 1.0).final_state();
  CHECK(std::abs(x1 - ref) < 1e-6 * std::abs(ref));
}

TEST_CASE("observed order of the state step refinement") {
  for (const char* name : {"zero-state-utility", "strong-blowup"}) {
    auto base = preset(name);
    std::vector<double> xs;
    for (int m : {1, 2, 4, 8}) {
      auto cfg = base;
      regrid(cfg, 16, m);
      const auto eta = wavy(16, cfg.T, 1.5);
      xs.push_back(integrate(cfg, eta, ControlPath::constant(cfg.T / 16, 32, 0.1), 2.0).final_state());
    }
    const double e1 = std::abs(xs[0] - xs[1]), e2 = std::abs(xs[1] - xs[2]), e3 = std::abs(xs[2] - xs[3]);
    const double p1 = std::log2(e1 / e2), p2 = std::log2(e2 / e3);
    INFO(name << " orders " << p1 << " " << p2);
    CHECK(p1 >= 3.5);
    CHECK(p2 >= 3.5);
  }
}

TEST_CASE("zero control with nonnegative production is nondecreasing") {
  for (const auto& cfg : builtin_catalog()) {
    const auto tr = integrate(cfg, wavy(cfg.n_hist(), cfg.T, 1.0), ControlPath{}, 5.0);
    for (int i = 0; i < tr.steps(); ++i) CHECK(tr.state_at_step(i + 1) >= tr.state_at_step(i));
    CHECK(tr.admissible);
  }
}

TEST_CASE("objective closed forms") {
  auto cfg = preset("zero-state-utility");
  const auto eta = HistoryState::constant(cfg.n_hist(), 1.0);
  SUBCASE("zero control, zero utilities") {
    const auto p = objective(cfg, eta, ControlPath{}, 3.0, TailPolicy::ZeroControlContinuation);
    CHECK(p.running == 0.0);
  }
  SUBCASE("constant control, constant state utility") {
    const double c = 0.2, H = 4.0;
    const auto p = objective(cfg, eta, ControlPath::constant(cfg.state_step(), 256, c), H,
                             TailPolicy::UpperBound);
    const double expect = cfg.u1.u(c) / cfg.rho * (1.0 - std::exp(-cfg.rho * H));
    CHECK(p.running == doctest::Approx(expect).epsilon(1e-12));
    CHECK(p.tail == doctest::Approx(std::exp(-cfg.rho * H) * cfg.utility_sup() / cfg.rho));
  }
  SUBCASE("constant state utility") {
    auto c2 = cfg;
    c2.u2.zero = false;
    c2.u2.u = [](double) { return -0.5; };
    c2.u2.u_prime = [](double) { return 0.0; };
    const auto p = objective(c2, eta, ControlPath{}, 2.0, TailPolicy::UpperBound);
    CHECK(p.running == doctest::Approx(-0.5 * (1.0 - std::exp(-2.0))).epsilon(1e-12));
  }
}

TEST_CASE("objective matches step-halved quadrature oracle") {
  auto base = preset("saturating-production");
  std::vector<double> vals;
  for (int m : {1, 2, 4}) {
    auto cfg = base;
    regrid(cfg, 64, m);
    const auto eta = HistoryState::constant(64, 1.0);
    vals.push_back(objective(cfg, eta, ControlPath::constant(cfg.T / 64, 64 * 20, 0.1), 20.0,
                             TailPolicy::ZeroControlContinuation)
                       .running);
  }
  const double ref = vals[2] + (vals[2] - vals[1]) / 3.0;
  CHECK(std::abs(vals[0] - ref) < 1e-6);
  CHECK(std::abs(vals[1] - vals[2]) < std::abs(vals[0] - vals[1]) + 1e-12);
}

TEST_CASE("payoff below the utility bound") {
  for (const auto& cfg : builtin_catalog()) {
    const auto eta = HistoryState::constant(cfg.n_hist(), 2.0);
    for (double c : {0.0, 0.1, 0.5}) {
      const auto p = objective(cfg, eta, ControlPath::constant(cfg.state_step(), 64 * 5, c), 5.0,
                               TailPolicy::ZeroControlContinuation);
      CHECK(p.total() <= cfg.utility_sup() / cfg.rho);
    }
  }
}

TEST_CASE("inadmissible controls are rejected") {
  auto cfg = preset("strong-blowup");
  const auto eta = HistoryState::constant(cfg.n_hist(), 0.5);
  CHECK_THROWS_AS(objective(cfg, eta, ControlPath::constant(cfg.state_step(), 64 * 5, 5.0), 5.0,
                            TailPolicy::ZeroControlContinuation),
                  Error);
  const auto tr = integrate(cfg, eta, ControlPath::constant(cfg.state_step(), 64 * 5, 5.0), 5.0);
  CHECK_FALSE(tr.admissible);
}

TEST_CASE("grid mismatches") {
  auto cfg = preset("strong-blowup");
  const auto eta = HistoryState::constant(cfg.n_hist(), 1.0);
  CHECK_THROWS_AS(integrate(cfg, eta, ControlPath::constant(0.7 * cfg.state_step(), 4, 0.1), 1.0),
                  Error);
  CHECK_THROWS_AS(integrate(cfg, eta, ControlPath{}, 0.3 * cfg.state_step()), Error);
  CHECK_THROWS_AS(integrate(cfg, HistoryState::constant(10, 1.0), ControlPath{}, 1.0), Error);
  try {
    integrate(cfg, eta, ControlPath::constant(0.7 * cfg.state_step(), 4, 0.1), 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigMismatch);
  }
}

TEST_CASE("comparison principle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const auto& cfg : builtin_catalog()) {
    const int n = cfg.n_hist();
    const auto eta = wavy(n, cfg.T, 1.0);
    CHECK(comparison_check(cfg, eta, eta, ControlPath{}, ControlPath{}, 3.0));
    CHECK(comparison_check(cfg, eta, eta, ControlPath::constant(cfg.state_step(), 64 * 3, 1.0),
                           ControlPath{}, 3.0));
    for (int trial = 0; trial < 20; ++trial) {
      HistoryState a = eta, b = eta;
      for (int j = 0; j < n; ++j) b.eta1[j] += 0.5 * U(rng);
      b.eta0 += 0.5 * U(rng);
      ControlPath ca = ControlPath::constant(cfg.hist_step() * 8, 24, 0.0), cb = ca;
      for (int i = 0; i < 24; ++i) {
        cb.values[i] = 0.3 * U(rng);
        ca.values[i] = cb.values[i] + 0.3 * U(rng);
      }
      CHECK(comparison_check(cfg, a, b, ca, cb, 3.0));
    }
  }
}

TEST_CASE("trajectory csv") {
  auto cfg = preset("strong-blowup");
  const auto tr = integrate(cfg, HistoryState::constant(cfg.n_hist(), 1.0),
                            ControlPath::constant(cfg.state_step(), 64, 0.1), 1.0);
  std::ostringstream os;
  write_trajectory_csv(os, cfg, tr);
  const std::string s = os.str();
  CHECK(s.rfind("t,x,c,discounted_utility_density\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == tr.values.size() + 1);
}

TEST_CASE("batch integration equals sequential") {
  auto cfg = preset("saturating-production");
  std::vector<HistoryState> etas;
  std::vector<ControlPath> cs;
  for (int i = 0; i < 6; ++i) {
    etas.push_back(HistoryState::constant(cfg.n_hist(), 1.0 + i));
    cs.push_back(ControlPath::constant(cfg.state_step(), 64, 0.1 * i));
  }
  const auto par = integrate_batch(cfg, etas, cs, 2.0, 3);
  for (int i = 0; i < 6; ++i) CHECK((par[i].values - integrate(cfg, etas[i], cs[i], 2.0).values).norm() == 0.0);
}
