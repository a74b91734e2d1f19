#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "ddeopt/approximation.hpp"

using namespace ddeopt;

namespace {

ProblemConfig small(const std::string& name, int n_hist = 16) {
  ProblemConfig cfg = preset(name);
  regrid(cfg, n_hist, 1);
  return cfg;
}

}  // namespace

TEST_CASE("truncation time") {
  CHECK(epsilon_truncation_time(0.1, 1.0, 0.0, 0.01) == doctest::Approx(10.0 * std::log(2000.0)));
  CHECK(epsilon_truncation_time(0.1, 1.0, 0.0, 0.01) == doctest::Approx(76.01).epsilon(1e-4));
  const double a = epsilon_truncation_time(0.5, 1.0, 0.2, 0.01);
  const double b = epsilon_truncation_time(0.5, 1.0, 0.2, 0.02);
  CHECK(a - b == doctest::Approx(std::log(2.0) / 0.5));
  CHECK(epsilon_truncation_time(1.0, 1.0, 0.0, 100.0) == 0.0);
  const double g = epsilon_truncation_time(1.0, 1.0, 0.0, 0.05, 1.0 / 32);
  CHECK(std::abs(g * 32 - std::round(g * 32)) < 1e-9);
  CHECK(g >= std::log(40.0));
  CHECK_THROWS_AS(epsilon_truncation_time(1.0, 0.0, 0.0, 0.1), Error);
}

TEST_CASE("state utility families") {
  for (int n : {1, 3, 10}) {
    for (auto s : {BlowupStrength::Weak, BlowupStrength::Strong}) {
      const auto f = build_state_utility_family(n, s);
      CHECK(f.member.u(1.0 / n) == 0.0);
      CHECK(f.member.u(5.0) == 0.0);
      for (double x : {1e-3, 0.05, 0.3}) {
        CHECK(f.member.u(x) <= 0.0);
        CHECK(build_state_utility_family(n + 1, s).member.u(x) >= f.member.u(x));
      }
    }
  }
  CHECK(build_state_utility_family(1, BlowupStrength::Weak).member.u(0.5) == doctest::Approx(-1.0));
  const auto strong = build_state_utility_family(1, BlowupStrength::Strong).member;
  CHECK(1e-6 * strong.u(1e-6) == doctest::Approx(-1e6).epsilon(1e-5));
  CHECK(strong.strong_blowup);
}

TEST_CASE("kernel family") {
  const double T = 1.0;
  double prev_err = 1e300;
  for (int k : {1, 2, 4, 8}) {
    const auto f = build_kernel_family(k, T, 64);
    CHECK(f.l1_mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(f.member.samples[0] == 0.0);
    for (int j = 0; j < f.member.samples.size(); ++j) CHECK(f.member.samples[j] >= 0.0);
    const double m = kernel_moment(f.member, T, [](double xi) { return xi; });
    CHECK(std::abs(m + T / 2) < T / (2 * k));
    double err = 0.0;
    for (int i = 0; i < 5; ++i) {
      auto fi = [i](double xi) { return std::cos((i + 1) * xi) + xi * xi * i; };
      err += std::abs(kernel_moment(f.member, T, fi) - fi(-T / 2));
    }
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(build_kernel_family(16, T, 64).l2_norm > 1.0);
}

TEST_CASE("pointwise delay integration") {
  ProblemConfig cfg = small("strong-blowup");
  cfg.r = 0.0;
  cfg.dynamics = linear_dynamics(0.0, 1.0);
  const auto eta = HistoryState::constant(16, 1.0);
  const auto tr = pointwise_delay_integrate(cfg, eta, ControlPath{}, cfg.T / 2);
  CHECK(tr.final_state() == doctest::Approx(1.0 + cfg.T / 2).epsilon(1e-12));

  SUBCASE("ordered pairs stay ordered") {
    const auto base = small("saturating-production");
    const auto pw = with_pointwise_delay(base);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int s = 0; s < 30; ++s) {
      HistoryState lo = sample_state(pw, 200 + s), hi = lo;
      hi.eta0 += U(rng);
      hi.eta1.array() += U(rng);
      const auto cl = ControlPath::constant(pw.state_step(), 32, 0.2 + U(rng));
      const auto ch = ControlPath::constant(pw.state_step(), 32, 0.1 * U(rng));
      CHECK(comparison_check(pw, lo, hi, cl, ch, 2.0));
    }
  }
  SUBCASE("kernel trajectories approach the pointwise one") {
    const auto base = small("saturating-production", 64);
    const auto eta = sample_state(base, 11);
    const auto c = ControlPath::constant(base.state_step(), 128, 0.2);
    const auto y = pointwise_delay_integrate(base, eta, c, 2.0);
    double prev = 1e300;
    for (int k : {1, 2, 4, 8, 16}) {
      const auto x = integrate(with_kernel(base, k), eta, c, 2.0);
      const double gap = (x.values - y.values).cwiseAbs().maxCoeff();
      CHECK(gap < prev);
      prev = gap;
    }
  }
}

TEST_CASE("Gronwall certificate") {
  SUBCASE("constant trajectory") {
    ProblemConfig cfg = small("strong-blowup");
    cfg.r = 0.0;
    cfg.dynamics = linear_dynamics(0.0, 0.0);
    const auto g = gronwall_certificate(cfg, 2, HistoryState::constant(16, 1.0), ControlPath{}, 1.0);
    CHECK(g.u_k < 1e-12);
    CHECK(g.bound < 1e-10);
    CHECK(g.observed_gap < 1e-12);
  }
  SUBCASE("bound dominates and u_k shrinks") {
    for (const char* name : {"saturating-production", "zero-state-utility", "strong-blowup"}) {
      const auto cfg = small(name, 64);
      const auto eta = sample_state(cfg, 21);
      const auto c = ControlPath::constant(cfg.state_step(), 128, 0.15);
      double prev = 1e300;
      for (int k : {1, 2, 4, 8, 16}) {
        const auto g = gronwall_certificate(cfg, k, eta, c, 2.0);
        INFO(name << " k " << k);
        CHECK(g.holds());
        CHECK(g.u_k < prev);
        CHECK(g.h_of_t == doctest::Approx(1.0 + g.K * 2.0 * std::exp(g.K * 2.0)));
        prev = g.u_k;
      }
    }
  }
}

TEST_CASE("nu floor") {
  const auto cfg = small("strong-blowup");
  const auto eta = HistoryState::constant(16, 1.0);
  double prev = 1e300;
  for (int n : {1, 2, 4, 8}) {
    const auto cn = with_state_utility(cfg, build_state_utility_family(n, BlowupStrength::Strong).member);
    const auto f = nu_floor(cn, eta, 3.0, 0.05);
    CHECK(f.nu < 1.0);
    CHECK(f.nu / (2 * f.C_M) < 1.0);
    const double lhs = f.nu / (2 * f.C_M) * cn.u2.u(2 * f.nu) * std::exp(-cn.rho * 4.0);
    CHECK(lhs == doctest::Approx(f.lhs));
    CHECK(lhs < f.rhs);
    CHECK(f.rhs < 0.0);
    // weaker blow-up (larger n) never allows a larger floor
    CHECK(f.nu <= prev);
    prev = f.nu;
  }
  CHECK_THROWS_AS(nu_floor(small("zero-state-utility"), eta, 3.0, 0.05), Error);
}

TEST_CASE("no-state pipeline") {
  const auto cfg = small("zero-state-utility");
  const auto eta = HistoryState::constant(16, 1.0);
  ApproxOptions o;
  o.synthesize = false;
  const auto r = construct_eps_optimal_nostate(cfg, eta, 0.05, o);
  REQUIRE(r.table.size() == 4);
  for (std::size_t i = 1; i < r.table.size(); ++i)
    CHECK(r.table[i].value_estimate >= r.table[i - 1].value_estimate);
  for (const auto& row : r.table) CHECK(row.value_estimate <= r.gap.reference_value + 1e-3);
  CHECK(1.0 / r.n < r.floor);
  CHECK(r.gap.pass);
  // U2^n vanishes along the returned trajectory, so both payoffs agree
  const auto cn = with_state_utility(cfg, build_state_utility_family(r.n, BlowupStrength::Weak).member);
  const auto tr = integrate(cn, eta, r.control, r.horizon);
  if (tr.min_value > 1.0 / r.n) {
    const double Jn = objective(cn, eta, r.control, r.horizon, TailPolicy::ZeroControlContinuation).total();
    CHECK(Jn == doctest::Approx(r.gap.payoff).epsilon(1e-12));
  }
  std::ostringstream os;
  write_sweep_csv(os, r.table);
  CHECK(os.str().rfind("parameter,value,value_estimate,certificate,gap\n", 0) == 0);
}

TEST_CASE("pointwise and combined pipelines") {
  const auto cfg = small("strong-blowup");
  const auto eta = HistoryState::constant(16, 1.0);
  ApproxOptions o;
  o.synthesize = false;
  const auto r = construct_eps_optimal_pointwise(cfg, eta, 0.05, o);
  CHECK(r.gap.pass);
  CHECK(r.k >= 1);
  const auto cert = gronwall_certificate(cfg, r.k, eta, r.control, r.horizon);
  CHECK(cert.holds());
  for (std::size_t i = 1; i < r.table.size(); ++i) CHECK(r.table[i].gap <= r.table[i - 1].gap);

  const auto q = construct_eps_optimal_combined(cfg, eta, 0.05, o);
  CHECK(q.gap.pass);
  CHECK(q.gap.paper_constant == doctest::Approx(0.15));
  CHECK(q.n >= 1);
  const auto tr = pointwise_delay_integrate(cfg, eta, q.control, q.horizon);
  CHECK(tr.admissible);
}

TEST_CASE("synthesized no-state control") {
  const auto cfg = small("zero-state-utility");
  const auto eta = HistoryState::constant(16, 1.0);
  ApproxOptions o;
  o.table_params = {2};
  const auto r = construct_eps_optimal_nostate(cfg, eta, 0.1, o);
  INFO(to_text(r.gap));
  CHECK(r.gap.pass);
  CHECK(r.realized_floor > 0.0);
  CHECK(r.gap.budget.size() == 4);
}
