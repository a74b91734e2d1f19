// Acceptance driver: one line per criterion. `acceptance 4 11` runs a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "ddeopt/approximation.hpp"
#include "ddeopt/dini_calculus.hpp"
#include "ddeopt/experiments.hpp"
#include "ddeopt/feedback_synthesis.hpp"
#include "ddeopt/hamiltonian.hpp"
#include "ddeopt/hilbert_embedding.hpp"
#include "ddeopt/value_function.hpp"

using namespace ddeopt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

ProblemConfig grid(const std::string& name, int n_hist) {
  ProblemConfig cfg = preset(name);
  regrid(cfg, n_hist, 1);
  return cfg;
}

const char* kPresets[] = {"saturating-production", "zero-state-utility", "strong-blowup"};

Outcome comparison() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int pairs = 0, bad = 0;
  for (const char* name : kPresets) {
    const auto cfg = preset(name);
    for (int s = 0; s < 200; ++s) {
      const HistoryState lo = sample_state(cfg, 7000 + s);
      HistoryState hi = lo;
      hi.eta0 += U(rng);
      for (Eigen::Index j = 0; j < hi.eta1.size(); ++j) hi.eta1[j] += 0.5 * U(rng);
      const int knots = 24;
      ControlPath c_lo = ControlPath::constant(cfg.hist_step() * 8, knots, 0.0), c_hi = c_lo;
      for (int i = 0; i < knots; ++i) {
        c_hi.values[i] = 0.3 * U(rng);
        c_lo.values[i] = c_hi.values[i] + 0.3 * U(rng);
      }
      // c_lo consumes more, so the lower history with the larger control stays below
      ++pairs;
      bad += !comparison_check(cfg, lo, hi, c_lo, c_hi, 3.0);
    }
  }
  return {bad == 0, std::to_string(pairs) + " pairs, " + std::to_string(bad) + " violations"};
}

Outcome mild_equivalence() {
  double worst = 0.0;
  for (const char* name : kPresets) {
    const auto cfg = preset(name);
    HistoryState eta = HistoryState::constant(cfg.n_hist(), 1.2);
    for (int j = 0; j < cfg.n_hist(); ++j) eta.eta1[j] += 0.2 * std::cos(5.0 * j / cfg.n_hist());
    const auto c = ControlPath::constant(cfg.hist_step() * 4, 32, 0.15);
    const double H = 2.0 * cfg.T;
    const auto tr = integrate(cfg, eta, c, H);
    const auto sol = mild_solve(cfg, to_hilbert(eta), c, H);
    for (int i = 0; i <= tr.steps(); ++i)
      worst = std::max(worst, std::abs(sol.states[i].eta0 - tr.state_at_step(i)));
  }
  return {worst <= 1e-6, fmt("sup |X0 - x| = %.3g (tol 1e-6)", worst)};
}

HilbertPoint smooth_point(int n, double T, double a, double b) {
  HilbertPoint p;
  p.eta0 = a;
  p.eta1.resize(n + 1);
  for (int j = 0; j <= n; ++j) {
    const double xi = -T + j * T / n;
    p.eta1[j] = a + b * std::sin(2.0 * xi) * xi;
  }
  return p;
}

Outcome semigroup() {
  double law = 0.0, trip = 0.0;
  std::mt19937_64 rng(3);
  for (const char* name : kPresets) {
    const auto cfg = preset(name);
    const int N = cfg.n_hist();
    std::uniform_int_distribution<int> steps(0, 3 * N / 2);
    const auto p = smooth_point(N, cfg.T, 0.8, 1.0);
    for (int k = 0; k < 50; ++k) {
      const double t = steps(rng) * cfg.hist_step(), s = steps(rng) * cfg.hist_step();
      const auto lhs = apply_semigroup(cfg, t, apply_semigroup(cfg, s, p));
      law = std::max(law, norm(cfg.T, lhs - apply_semigroup(cfg, t + s, p)));
    }
    const auto back = apply_discrete_A(cfg, apply_A_inverse(cfg, p));
    trip = std::max(trip, std::abs(back.eta0 - p.eta0));
    for (int j = 0; j < N; ++j)
      trip = std::max(trip, std::abs(back.eta1[j] - 0.5 * (p.eta1[j] + p.eta1[j + 1])));
  }
  return {law < 1e-8 && trip < 1e-8, fmt("semigroup law %.3g, A^-1 round trip %.3g (tol 1e-8)", law, trip)};
}

double golden_max(const UtilitySpec& u, double zeta, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double c) { return u.u(c) - zeta * c; };
  double a = lo, b = hi, c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 300 && b - a > 1e-15 * (1.0 + b); ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return std::max(f(0.5 * (a + b)), f(0.0));
}

Outcome hamiltonian() {
  const auto u = preset("strong-blowup").u1;
  std::vector<double> z, h, c;
  for (int i = 0; i < 100; ++i) {
    z.push_back(std::pow(10.0, -3.0 + 6.0 * i / 99.0));
    const auto hv = legendre(u, z.back());
    h.push_back(hv.h);
    c.push_back(hv.c_star);
  }
  int shape_bad = 0;
  for (int i = 1; i < 100; ++i) shape_bad += h[i] > h[i - 1];
  for (int i = 1; i + 1 < 100; ++i) {
    const double s0 = (h[i] - h[i - 1]) / (z[i] - z[i - 1]);
    const double s1 = (h[i + 1] - h[i]) / (z[i + 1] - z[i]);
    shape_bad += s1 - s0 < -1e-9;
  }
  double env = 0.0, gold = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double d = 1e-5 * z[i];
    const double fd = (legendre(u, z[i] + d).h - legendre(u, z[i] - d).h) / (2.0 * d);
    env = std::max(env, std::abs(fd + c[i]) / std::max(c[i], 1e-12));
  }
  for (double zeta : {1e-2, 0.1, 0.5, 1.0, 3.0}) {
    const double hi = 10.0 * (1.0 + legendre(u, zeta).c_star);
    gold = std::max(gold, std::abs(legendre(u, zeta).h - golden_max(u, zeta, 0.0, hi)));
  }
  return {shape_bad == 0 && env <= 1e-6 && gold <= 1e-8,
          fmt("shape violations %.0f, envelope rel err %.3g, golden gap %.3g", shape_bad, env, gold)};
}

Outcome value_properties() {
  const auto cfg = grid("strong-blowup", 32);
  const auto rep = property_scan(cfg, 30, 1, 1);
  double worst_bound = -1e300;
  for (const auto& r : rep.rows)
    if (r.kind == "bound") worst_bound = std::max(worst_bound, r.lhs - r.rhs);
  const bool ok = rep.concavity_checks == 30 && rep.monotone_checks == 30 && rep.passed();
  std::ostringstream os;
  os << rep.concavity_checks << " concavity (" << rep.concavity_violations << " bad), "
     << rep.monotone_checks << " monotonicity (" << rep.monotone_violations << " bad), "
     << rep.bound_checks << " bound (" << rep.bound_violations << " bad, max V - bound "
     << worst_bound << "), tol " << rep.tol_num;
  return {ok, os.str()};
}

Outcome verification() {
  const auto cfg = grid("strong-blowup", 32);
  const auto eta = HistoryState::constant(32, 1.0);
  auto policy = FeedbackPolicy::live(cfg);
  const auto rep = verify_optimality(policy, cfg, eta, 10.0);
  const double cap = 5e-2 * std::abs(rep.value_estimate);
  const bool ok = rep.pass && rep.upper_ok && rep.budget <= cap;
  std::ostringstream os;
  os.precision(6);
  os << "V " << rep.value_estimate << ", J " << rep.feedback_payoff << ", gap " << rep.gap
     << ", budget " << rep.budget << " (cap " << cap << "):";
  for (const auto& b : rep.items) os << ' ' << b.name << '=' << b.value;
  return {ok, os.str()};
}

Outcome blowup() {
  const auto cfg = grid("strong-blowup", 32);
  const auto scan = boundary_blowup_scan(cfg, Vector::Zero(32), 5, 1.0, 1e-2);
  const double first = scan.rows.front().central, last = scan.rows.back().central;
  return {last > 10.0 * first, fmt("V_eta0 %.4g -> %.4g (ratio %.3g, need > 10)", first, last, last / first)};
}

Outcome gronwall() {
  bool ok = true;
  std::ostringstream os;
  for (const char* name : kPresets) {
    const auto cfg = grid(name, 64);
    const auto eta = sample_state(cfg, 21);
    const auto c = ControlPath::constant(cfg.state_step(), 128, 0.15);
    double prev = 1e300, worst = -1e300;
    bool dec = true;
    for (int k : {1, 2, 4, 8, 16}) {
      const auto g = gronwall_certificate(cfg, k, eta, c, 2.0 * cfg.T);
      ok = ok && g.holds(1e-6);
      worst = std::max(worst, g.observed_gap - g.bound);
      dec = dec && g.u_k < prev;
      prev = g.u_k;
    }
    ok = ok && dec;
    os << name << ": max(observed - bound) " << worst << (dec ? ", u_k decreasing; " : ", u_k NOT decreasing; ");
  }
  return {ok, os.str()};
}

Outcome vanishing_state_utility() {
  const auto cfg = grid("zero-state-utility", 32);
  const auto eta = HistoryState::constant(32, 1.0);
  const auto r = construct_eps_optimal_nostate(cfg, eta, 0.05);
  bool mono = true, bounded = true;
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; i < r.table.size(); ++i) {
    if (i > 0) mono = mono && r.table[i].value_estimate >= r.table[i - 1].value_estimate;
    bounded = bounded && r.table[i].value_estimate <= r.gap.reference_value + cfg.numerics.value_tol;
    os << "V^" << r.table[i].value << "=" << r.table[i].value_estimate << ' ';
  }
  os << "V0=" << r.gap.reference_value << " J=" << r.gap.payoff << " budget=" << r.gap.budget_total
     << " n=" << r.n;
  return {mono && bounded && r.gap.pass && r.table.size() == 4, os.str()};
}

Outcome pointwise_limit() {
  const auto cfg = grid("strong-blowup", 32);
  const auto eta = HistoryState::constant(32, 1.0);
  const auto r = construct_eps_optimal_pointwise(cfg, eta, 0.05);
  bool dec = true;
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; i < r.table.size(); ++i) {
    if (i > 0) dec = dec && r.table[i].gap < r.table[i - 1].gap;
    os << "|V_" << r.table[i].value << "-V0|=" << r.table[i].gap << ' ';
  }
  os << "pointwise J=" << r.gap.payoff << " V0=" << r.gap.reference_value << " (k=" << r.k << ")";
  const auto q = construct_eps_optimal_combined(cfg, eta, 0.05);
  os << "; combined J=" << q.gap.payoff << " V00=" << q.gap.reference_value << " (n=" << q.n
     << ", k=" << q.k << ", 3eps+budget=" << q.gap.paper_constant + q.gap.budget_total << ")";
  return {dec && r.gap.pass && q.gap.pass, os.str()};
}

Outcome counterexamples() {
  const auto zero = SampledFunction::sample([](double) { return 0.0; }, 0.0, 1.0, 729);
  bool cantor = true;
  for (int depth : {1, 6, 30}) {
    const auto g =
        SampledFunction::sample([=](double t) { return -cantor_function(t, depth); }, 0.0, 1.0, 729);
    const auto r = generalized_ftc_check(g, zero);
    cantor = cantor && r.lhs == -1.0 && r.rhs == 0.0 && !r.conclusion_holds;
  }
  const auto rows = pointwise_delay_counterexample(2048);
  bool table = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    table = table && rows[i].abs_eta0 == 0.5;
    if (i > 0) table = table && rows[i].minus_one_norm < rows[i - 1].minus_one_norm;
  }
  table = table && rows.back().minus_one_norm < 1e-2;
  const double M = epsilon_truncation_time(0.1, 1.0, 0.0, 0.01);
  std::ostringstream os;
  os.precision(6);
  os << "Cantor lhs=-1 rhs=0 " << (cantor ? "reproduced" : "NOT reproduced") << "; |eta0^n| = 0.5 and "
     << "|eta^n|_-1 decreasing to " << rows.back().minus_one_norm << (table ? "" : " (table FAILS)")
     << "; M = " << M;
  return {cantor && table && std::abs(M - 76.01) < 5e-3, os.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "ddeopt_acceptance_det";
  fs::remove_all(root);
  std::vector<ExperimentManifest> ms(3);
  ms[0].command = "counterexamples";
  ms[1].command = "simulate";
  ms[1].overrides = {{"state.sample", "true"}};
  ms[1].seed = 17;
  ms[2].command = "approx-pointwise";
  ms[2].synthesize = false;
  ms[2].overrides = {{"numerics.n_hist", "16"}};
  int files = 0, diffs = 0;
  std::ostringstream sink;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    std::vector<fs::path> dirs;
    for (const char* tag : {"a", "b"}) {
      ms[i].out_dir = (root / (std::to_string(i) + tag)).string();
      if (run(ms[i], sink) != 0) return {false, ms[i].command + " failed"};
      dirs.push_back(ms[i].out_dir);
    }
    for (const auto& e : fs::directory_iterator(dirs[0]))
      if (e.path().extension() == ".csv") {
        ++files;
        diffs += slurp(e.path()) != slurp(dirs[1] / e.path().filename());
      }
  }
  fs::remove_all(root);
  return {files > 0 && diffs == 0, std::to_string(files) + " CSVs compared, " +
                                       std::to_string(diffs) + " differ"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "comparison principle", 30, comparison},
      {2, "mild/delay equivalence", 10, mild_equivalence},
      {3, "semigroup law and A^-1 round trip", 5, semigroup},
      {4, "Hamiltonian shape, envelope and oracle", 5, hamiltonian},
      {5, "value concavity, monotonicity and bound", 300, value_properties},
      {6, "verification end-to-end", 600, verification},
      {7, "boundary blow-up of V_eta0", 300, blowup},
      {8, "Gronwall certificate", 60, gronwall},
      {9, "vanishing state utility", 900, vanishing_state_utility},
      {10, "pointwise-delay limit and combined pipeline", 1800, pointwise_limit},
      {11, "counterexamples and truncation time", 10, counterexamples},
      {12, "determinism", 600, determinism}};
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool ok = o.ok && in_time;
    failures += !ok;
    std::printf("criterion %2d %s: %s | %s | %.1f s of %.0f s%s\n", c.id, ok ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : " (over time)");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
