#include "doctest.h"

#include <cmath>
#include <limits>

#include "ddeopt/value_function.hpp"

using namespace ddeopt;

namespace {

ProblemConfig small(const std::string& name, int n_hist = 16) {
  ProblemConfig cfg = preset(name);
  regrid(cfg, n_hist, 1);
  return cfg;
}

HistoryState flat(const ProblemConfig& cfg, double v) {
  return HistoryState::constant(cfg.numerics.n_hist, v);
}

}  // namespace

TEST_CASE("knot layout") {
  const auto cfg = small("strong-blowup");
  const auto L = make_knots(cfg, 5.0, 32);
  CHECK(L.count() == 32);
  CHECK(L.steps() == 80);
  for (int k = 0; k < L.count(); ++k) CHECK(L.bounds[k + 1] > L.bounds[k]);
  CHECK(L.bounds[1] - L.bounds[0] <= L.bounds[32] - L.bounds[31]);
  // more knots than steps collapses to one knot per step
  CHECK(make_knots(cfg, 0.5, 32).count() == 8);
  Vector k = Vector::LinSpaced(L.count(), 0.1, 0.4);
  CHECK((path_to_knots(L, knots_to_path(L, k)) - k).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("tape gradient matches finite differences") {
  for (const char* name : {"saturating-production", "strong-blowup"}) {
    const auto cfg = small(name);
    const HistoryState eta = sample_state(cfg, 3);
    TranscribedPayoff tp(cfg, eta, make_knots(cfg, 3.0, 6), 1.0);
    Vector k(6);
    k << 0.3, 0.25, 0.4, 0.2, 0.35, 0.3;
    Vector g;
    double d0 = 0.0;
    const double v = tp.value_and_gradient(k, g, &d0);
    CHECK(v == doctest::Approx(tp.value(k)).epsilon(1e-14));
    for (int i = 0; i < 6; ++i) {
      const double h = 1e-6;
      Vector a = k, b = k;
      a[i] += h;
      b[i] -= h;
      const double fd = (tp.value(a) - tp.value(b)) / (2 * h);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
    TranscribedPayoff up(cfg, HistoryState{eta.eta0 + 1e-6, eta.eta1}, tp.layout(), 1.0);
    TranscribedPayoff dn(cfg, HistoryState{eta.eta0 - 1e-6, eta.eta1}, tp.layout(), 1.0);
    CHECK(d0 == doctest::Approx((up.value(k) - dn.value(k)) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("barrier term and its gradient") {
  const auto cfg = small("zero-state-utility");
  const HistoryState eta = flat(cfg, 1.0);
  TranscribedPayoff tp(cfg, eta, make_knots(cfg, 3.0, 4), 1.0);
  Vector k = Vector::Constant(4, 0.3);
  const double plain = tp.value(k);
  tp.set_barrier(1e-3);
  CHECK(tp.objective(k) != plain);
  CHECK(tp.value(k) == plain);
  Vector g;
  tp.value_and_gradient(k, g);
  Vector a = k, b = k;
  a[2] += 1e-6;
  b[2] -= 1e-6;
  CHECK(g[2] == doctest::Approx((tp.objective(a) - tp.objective(b)) / 2e-6).epsilon(1e-6));
}

TEST_CASE("domain probe") {
  const auto cfg = small("saturating-production");
  SUBCASE("positive history keeps g >= eta0") {
    const auto p = domain_probe(cfg, flat(cfg, 0.7));
    CHECK(p.in_domain);
    CHECK(p.g_value >= 0.7);
  }
  SUBCASE("negative history agrees with the trajectory minimum") {
    ProblemConfig lin = cfg;
    lin.dynamics = linear_dynamics(0.0, 1.0);
    HistoryState eta = flat(lin, -10.0);
    eta.eta0 = 1.0;
    const auto p = domain_probe(lin, eta);
    const auto tr = integrate(lin, eta, ControlPath{}, lin.T);
    CHECK(p.g_value == tr.min_value);
    CHECK(p.in_domain == (tr.min_value > lin.pos_tol(1.0)));
    CHECK_FALSE(p.in_domain);
  }
  SUBCASE("strictly increasing in eta0") {
    ProblemConfig lin = cfg;
    lin.dynamics = linear_dynamics(0.0, 1.0);
    for (int s = 0; s < 50; ++s) {
      HistoryState eta = sample_state(lin, 100 + s);
      eta.eta1 *= -1.0;
      const double g0 = domain_probe(lin, eta).g_value;
      eta.eta0 += 0.1;
      CHECK(domain_probe(lin, eta).g_value > g0);
    }
  }
}

TEST_CASE("domain boundary is where the probe flips") {
  ProblemConfig cfg = small("saturating-production");
  cfg.dynamics = linear_dynamics(0.0, 1.0);
  const Vector eta1 = Vector::Constant(cfg.numerics.n_hist, -0.5);
  const double b = domain_boundary(cfg, eta1);
  CHECK(b > 0.0);
  CHECK_FALSE(domain_probe(cfg, HistoryState{b * (1 - 1e-9), eta1}).in_domain);
  CHECK(domain_probe(cfg, HistoryState{b * (1 + 1e-9), eta1}).in_domain);
}

TEST_CASE("outside the domain the value is -inf") {
  ProblemConfig cfg = small("saturating-production");
  cfg.dynamics = linear_dynamics(0.0, 1.0);
  HistoryState eta = flat(cfg, -10.0);
  eta.eta0 = 1.0;
  const auto v = estimate_value(cfg, eta);
  CHECK_FALSE(v.in_domain);
  CHECK(v.value == -std::numeric_limits<double>::infinity());
}

TEST_CASE("brute-force two-knot oracle") {
  for (const char* name : {"strong-blowup", "zero-state-utility", "saturating-production"}) {
    const auto cfg = small(name);
    const HistoryState eta = flat(cfg, 1.5);
    ValueOptions o;
    o.horizon = 2.0;
    o.knots = 2;
    const auto est = estimate_value(cfg, eta, o);
    const double cmax = 2.0;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j < 50; ++j) {
        Vector k(2);
        k << cmax * i / 49.0, cmax * j / 49.0;
        try {
          const auto p = objective(cfg, eta, knots_to_path(est.layout, k), est.horizon,
                                   TailPolicy::ZeroControlContinuation);
          best = std::max(best, p.total());
        } catch (const Error&) {
        }
      }
    INFO(name << " estimate " << est.value << " grid " << best);
    CHECK(est.value >= best - 1e-9);
    CHECK(est.value - best < 1e-3);
    const auto p = objective(cfg, eta, est.control(), est.horizon, TailPolicy::ZeroControlContinuation);
    CHECK(p.total() == doctest::Approx(est.value).epsilon(1e-12));
  }
}

TEST_CASE("value below the utility bound on presets") {
  for (const auto& name : {"saturating-production", "zero-state-utility", "strong-blowup"}) {
    const auto cfg = small(name, 32);
    for (double e0 : {0.5, 2.0, 10.0}) {
      const auto est = estimate_value(cfg, flat(cfg, e0));
      CHECK(est.converged);
      CHECK(est.value < cfg.utility_sup() / cfg.rho);
      CHECK(est.tail_gap >= 0.0);
      CHECK(est.value <= cfg.utility_sup() / cfg.rho + est.tail_gap);
    }
  }
}

TEST_CASE("no sustainable consumption gives a value near zero") {
  const auto cfg = small("zero-state-utility");
  const auto est = estimate_value(cfg, flat(cfg, 1e-8));
  CHECK(est.value >= 0.0);
  CHECK(est.value < 1e-2);
}

TEST_CASE("enlarging the horizon never lowers value - tail_gap") {
  const auto cfg = small("strong-blowup");
  const HistoryState eta = flat(cfg, 2.0);
  double prev = -std::numeric_limits<double>::infinity();
  for (double M : {2.0, 4.0, 6.0, 8.0}) {
    ValueOptions o;
    o.horizon = M;
    const auto est = estimate_value(cfg, eta, o);
    CHECK(est.value - est.tail_gap >= prev - 1e-9);
    prev = est.value - est.tail_gap;
  }
}

TEST_CASE("eta0 slopes") {
  const auto cfg = small("strong-blowup");
  for (int s = 0; s < 6; ++s) {
    const HistoryState eta = sample_state(cfg, 40 + s);
    const auto sl = slope_eta0(cfg, eta);
    INFO("eta0 " << eta.eta0);
    CHECK(sl.forward <= sl.central + 1e-12);
    CHECK(sl.central <= sl.backward + 1e-12);
    CHECK(sl.central > 0.0);
    const auto half = slope_eta0(cfg, eta, 0.5 * sl.h);
    CHECK(std::abs(half.central - sl.central) < 5e-2 * std::abs(sl.central));
  }
}

TEST_CASE("dynamic programming consistency") {
  const auto cfg = small("strong-blowup");
  const HistoryState eta = flat(cfg, 2.0);
  const auto V = estimate_value(cfg, eta);
  const double delta = 0.25;
  const int steps = 4;
  auto rhs = [&](double c) {
    const auto path = ControlPath::constant(cfg.state_step(), steps, c);
    const auto tr = integrate(cfg, eta, path, delta);
    if (!tr.admissible) return -std::numeric_limits<double>::infinity();
    const double run = objective(cfg, eta, path, delta, TailPolicy::UpperBound).running;
    return run + std::exp(-cfg.rho * delta) * estimate_value(cfg, tr.window(cfg, steps)).value;
  };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = 4.0, c = b - g * (b - a), d = a + g * (b - a);
  double fc = rhs(c), fd = rhs(d);
  for (int i = 0; i < 22; ++i) {
    if (fc > fd) {
      b = d, d = c, fd = fc, c = b - g * (b - a), fc = rhs(c);
    } else {
      a = c, c = d, fc = fd, d = a + g * (b - a), fd = rhs(d);
    }
  }
  const double best = std::max(fc, fd);
  INFO("V " << V.value << " one-step " << best);
  CHECK(std::abs(V.value - best) < 3 * V.tolerance);
}

TEST_CASE("property scan") {
  const auto cfg = small("strong-blowup");
  SUBCASE("a state combined with itself") {
    const HistoryState eta = sample_state(cfg, 9);
    const auto a = estimate_value(cfg, eta);
    const auto b = estimate_value(cfg, eta);
    CHECK(a.value == b.value);
  }
  SUBCASE("small scan passes") {
    const auto rep = property_scan(cfg, 4, 5, 1);
    CHECK(rep.concavity_checks == 4);
    CHECK(rep.monotone_checks == 4);
    CHECK(rep.bound_checks == 16);
    CHECK(rep.passed());
    CHECK(rep.continuity_modulus > 0.0);
    CHECK(std::isfinite(rep.continuity_modulus));
  }
}

TEST_CASE("boundary blow-up walk") {
  const auto cfg = small("strong-blowup");
  const Vector eta1 = Vector::Constant(cfg.numerics.n_hist, 0.0);
  const auto scan = boundary_blowup_scan(cfg, eta1, 5, 1.0, 1e-2);
  REQUIRE(scan.rows.size() == 5);
  CHECK(scan.probe_flips_once);
  CHECK(std::isfinite(scan.rows.front().value));
  for (std::size_t i = 1; i < scan.rows.size(); ++i) {
    CHECK(scan.rows[i].value < scan.rows[i - 1].value);
    CHECK(scan.rows[i].central > scan.rows[i - 1].central);
  }
  CHECK(scan.rows.back().central > 10 * scan.rows.front().central);
}
