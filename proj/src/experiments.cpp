#include "ddeopt/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <Eigen/Core>
#include "json.hpp"

#include "ddeopt/approximation.hpp"
#include "ddeopt/delay_dynamics.hpp"
#include "ddeopt/dini_calculus.hpp"
#include "ddeopt/feedback_synthesis.hpp"
#include "ddeopt/hilbert_embedding.hpp"
#include "ddeopt/value_function.hpp"

namespace ddeopt {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : cols_(header.size()) { row(header); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != cols_) throw Error(ErrorCode::InvalidArgument, "ragged csv row");
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  std::size_t cols_;
  std::ostringstream os_;
};

std::string num(double v) { return format_number(v); }
std::string num(int v) { return std::to_string(v); }
std::string flag(bool b) { return b ? "true" : "false"; }

struct Context {
  const ExperimentManifest& m;
  LoadedConfig loaded;
  fs::path out;
  std::ostream& log;
  std::vector<std::string> files;
  std::ostringstream summary;

  ProblemConfig& cfg() { return loaded.problem; }
  HistoryState state() { return initial_state(loaded, m.seed); }

  void write(const std::string& name, const std::string& body) {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (out / name).string());
    f << body;
    if (!f) throw Error(ErrorCode::Io, "write failed for " + (out / name).string());
    files.push_back(name);
  }
  template <class T>
  void note(const std::string& key, const T& v) {
    summary << key << ": " << v << '\n';
  }
  std::string cache_dir() const {
    if (const char* env = std::getenv("DDEOPT_CACHE_DIR"); env && *env) return env;
    return (out / "cache").string();
  }
  double horizon(double fallback) const { return m.horizon > 0.0 ? m.horizon : fallback; }
};

std::string control_csv(const ControlPath& c) {
  Csv csv({"t", "c"});
  for (int i = 0; i < c.values.size(); ++i) csv.row({num(i * c.dt), num(c.values[i])});
  return csv.str();
}

int cmd_simulate(Context& cx) {
  const auto& cfg = cx.cfg();
  const auto eta = cx.state();
  const double H = cx.horizon(2.0 * cfg.T);
  const int steps = static_cast<int>(std::ceil(H / cfg.state_step() - 1e-9));
  const auto c = ControlPath::constant(cfg.state_step(), steps, cx.m.control);
  const auto tr = integrate(cfg, eta, c, H);
  std::ostringstream os;
  write_trajectory_csv(os, cfg, tr);
  cx.write("trajectory.csv", os.str());
  cx.note("admissible", flag(tr.admissible));
  cx.note("min_state", num(tr.min_value));
  cx.note("final_state", num(tr.final_state()));
  if (tr.admissible) {
    const auto p = objective(cfg, eta, c, H, TailPolicy::ZeroControlContinuation);
    cx.note("payoff", num(p.total()));
  }
  return 0;
}

int cmd_value(Context& cx) {
  const auto& cfg = cx.cfg();
  const auto eta = cx.state();
  ValueOptions vo;
  vo.horizon = cx.m.horizon;
  const auto v = estimate_value(cfg, eta, vo);
  Csv csv({"eta0", "value", "smooth_value", "v_eta0", "horizon", "tail_gap", "floor", "tolerance",
           "converged"});
  csv.row({num(eta.eta0), num(v.value), num(v.smooth_value), num(v.v_eta0), num(v.horizon),
           num(v.tail_gap), num(v.floor), num(v.tolerance), flag(v.converged)});
  cx.write("value.csv", csv.str());
  cx.write("control.csv", control_csv(v.control()));
  cx.note("value", num(v.value));
  cx.note("v_eta0", num(v.v_eta0));
  cx.note("horizon", num(v.horizon));
  cx.note("tolerance", num(v.tolerance));
  if (cx.m.samples > 0) {
    const auto rep = property_scan(cfg, cx.m.samples, cx.m.seed, cx.m.workers);
    Csv p({"kind", "lhs", "rhs", "passed"});
    for (const auto& r : rep.rows) p.row({r.kind, num(r.lhs), num(r.rhs), flag(r.passed)});
    cx.write("properties.csv", p.str());
    cx.note("properties_passed", flag(rep.passed()));
    return rep.passed() ? 0 : 1;
  }
  return 0;
}

FeedbackPolicy make_policy(Context& cx) {
  FeedbackOptions fo;
  fo.cache_dir = cx.cache_dir();
  fs::create_directories(fo.cache_dir);
  return FeedbackPolicy::live(cx.cfg(), fo);
}

void note_cache(Context& cx, const FeedbackPolicy& policy) {
  const auto s = policy.stats();
  cx.note("cache_hits", s.hits);
  cx.note("cache_misses", s.misses);
  cx.note("cache_disk_loaded", s.disk_loaded);
}

int cmd_feedback(Context& cx) {
  const auto& cfg = cx.cfg();
  const auto eta = cx.state();
  auto policy = make_policy(cx);
  const double H = cx.horizon(10.0);
  const auto loop = closed_loop_solve(policy, cfg, eta, H, cx.m.stride);
  policy.flush();
  const auto& tr = loop.trajectory;
  Csv csv({"t", "x", "c", "price"});
  for (int i = 0; i < loop.control.values.size(); ++i)
    csv.row({num(i * loop.control.dt), num(tr.state_at_step(i)), num(loop.control.values[i]),
             num(loop.prices[i])});
  cx.write("closed_loop.csv", csv.str());
  cx.note("horizon", num(H));
  cx.note("stride", loop.stride);
  cx.note("min_state", num(tr.min_value));
  cx.note("hamiltonian_deficit", num(hamiltonian_deficit(cfg, loop)));
  note_cache(cx, policy);
  return 0;
}

void budget_rows(Csv& csv, const std::vector<BudgetItem>& items) {
  for (const auto& b : items) csv.row({b.name, num(b.value)});
}

int cmd_verify(Context& cx) {
  const auto& cfg = cx.cfg();
  const auto eta = cx.state();
  auto policy = make_policy(cx);
  const double H = cx.horizon(10.0);
  const auto rep = verify_optimality(policy, cfg, eta, H, cx.m.stride);
  policy.flush();
  Csv csv({"item", "value"});
  csv.row({"value_estimate", num(rep.value_estimate)});
  csv.row({"feedback_payoff", num(rep.feedback_payoff)});
  csv.row({"gap", num(rep.gap)});
  csv.row({"budget", num(rep.budget)});
  budget_rows(csv, rep.items);
  csv.row({"estimator_tolerance", num(rep.estimator_tolerance)});
  csv.row({"upper_ok", flag(rep.upper_ok)});
  csv.row({"pass", flag(rep.pass)});
  cx.write("verification.csv", csv.str());
  cx.summary << to_text(rep);
  note_cache(cx, policy);
  return rep.pass && rep.upper_ok ? 0 : 1;
}

int cmd_approx(Context& cx, int which) {
  const auto& cfg = cx.cfg();
  const auto eta = cx.state();
  ApproxOptions o;
  o.stride = cx.m.stride;
  o.synthesize = cx.m.synthesize;
  const auto r = which == 0   ? construct_eps_optimal_nostate(cfg, eta, cx.m.eps, o)
                 : which == 1 ? construct_eps_optimal_pointwise(cfg, eta, cx.m.eps, o)
                              : construct_eps_optimal_combined(cfg, eta, cx.m.eps, o);
  std::ostringstream sweep;
  write_sweep_csv(sweep, r.table);
  cx.write("sweep.csv", sweep.str());
  Csv b({"item", "value"});
  b.row({"reference_value", num(r.gap.reference_value)});
  b.row({"payoff", num(r.gap.payoff)});
  b.row({"gap", num(r.gap.gap)});
  b.row({"paper_constant", num(r.gap.paper_constant)});
  budget_rows(b, r.gap.budget);
  b.row({"budget_total", num(r.gap.budget_total)});
  b.row({"pass", flag(r.gap.pass)});
  cx.write("certificate.csv", b.str());
  cx.write("control.csv", control_csv(r.control));
  cx.note("eps", num(cx.m.eps));
  cx.note("horizon", num(r.horizon));
  cx.note("n", r.n);
  cx.note("k", r.k);
  cx.note("floor", num(r.floor));
  cx.note("target_value", num(r.target_value));
  if (r.nu.nu > 0.0) cx.note("nu", num(r.nu.nu));
  cx.summary << to_text(r.gap);
  return r.gap.pass ? 0 : 1;
}

int cmd_counterexamples(Context& cx) {
  const auto zero = SampledFunction::sample([](double) { return 0.0; }, 0.0, 1.0, 729);
  Csv cantor({"depth", "lhs", "rhs", "premise_failures", "premise_holds", "conclusion_holds"});
  bool ok = true;
  for (int depth : {1, 6, 30}) {
    const auto g =
        SampledFunction::sample([=](double t) { return -cantor_function(t, depth); }, 0.0, 1.0, 729);
    const auto r = generalized_ftc_check(g, zero);
    cantor.row({num(depth), num(r.lhs), num(r.rhs), num(static_cast<int>(r.premise_failures.size())),
                flag(r.premise_holds), flag(r.conclusion_holds)});
    ok = ok && r.lhs == -1.0 && r.rhs == 0.0;
  }
  cx.write("cantor.csv", cantor.str());

  const auto rows = pointwise_delay_counterexample(2048, cx.cfg().T);
  Csv rem({"n", "abs_eta0", "minus_one_norm", "integral", "offset"});
  for (const auto& r : rows)
    rem.row({num(r.n), num(r.abs_eta0), num(r.minus_one_norm), num(r.integral), num(r.offset)});
  cx.write("pointwise_counterexample.csv", rem.str());

  Csv trunc({"rho", "u1_sup", "u1_at_0", "eps", "M"});
  const double M = epsilon_truncation_time(0.1, 1.0, 0.0, 0.01);
  trunc.row({num(0.1), num(1.0), num(0.0), num(0.01), num(M)});
  cx.write("truncation.csv", trunc.str());

  cx.note("cantor_lhs_minus_one_rhs_zero", flag(ok));
  cx.note("final_minus_one_norm", num(rows.back().minus_one_norm));
  cx.note("truncation_time", num(M));
  return ok ? 0 : 1;
}

int cmd_validate(Context& cx) {
  const auto rep = validate_config(cx.cfg());
  Csv csv({"name", "scope", "passed", "witness"});
  for (const auto& c : rep.checks) {
    std::string w = c.witness;
    for (char& ch : w)
      if (ch == ',') ch = ';';
    csv.row({c.name, c.scope, flag(c.passed), w});
  }
  cx.write("validation.csv", csv.str());
  cx.note("passed", flag(rep.passed()));
  for (const auto& f : rep.failures()) cx.note("failed", f);
  return rep.passed() ? 0 : 1;
}

const std::map<std::string, std::function<int(Context&)>>& dispatch() {
  static const std::map<std::string, std::function<int(Context&)>> table{
      {"simulate", cmd_simulate},
      {"value", cmd_value},
      {"feedback", cmd_feedback},
      {"verify", cmd_verify},
      {"approx-nostate", [](Context& c) { return cmd_approx(c, 0); }},
      {"approx-pointwise", [](Context& c) { return cmd_approx(c, 1); }},
      {"approx-combined", [](Context& c) { return cmd_approx(c, 2); }},
      {"counterexamples", cmd_counterexamples},
      {"validate", cmd_validate}};
  return table;
}

std::string manifest_text(const ExperimentManifest& m, const LoadedConfig& lc) {
  std::ostringstream os;
  os << "command=" << m.command << '\n'
     << "seed=" << m.seed << '\n'
     << "horizon=" << format_number(m.horizon) << '\n'
     << "eps=" << format_number(m.eps) << '\n'
     << "control=" << format_number(m.control) << '\n'
     << "samples=" << m.samples << '\n'
     << "stride=" << m.stride << '\n'
     << "synthesize=" << m.synthesize << '\n'
     << lc.text;
  return os.str();
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream f(p);
  f << j.dump(2) << '\n';
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : dispatch()) v.push_back(k);
    return v;
  }();
  return names;
}

int run(const ExperimentManifest& m, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out = m.out_dir;
  auto fail = [&](const std::string& code, const std::string& msg, int rc) {
    log << "error: " << code << ": " << msg << '\n';
    try {
      fs::create_directories(out);
      write_json(out / "error.json", {{"command", m.command}, {"code", code}, {"message", msg}});
    } catch (...) {
    }
    return rc;
  };
  try {
    const auto it = dispatch().find(m.command);
    if (it == dispatch().end())
      throw Error(ErrorCode::InvalidArgument, "unknown command '" + m.command + "'");
    if (m.workers < 1) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out))
      throw Error(ErrorCode::Io, "cannot create output directory " + out.string());
    fs::remove(out / "error.json", ec);

    Context cx{m, load_config(m.config_path, m.preset, m.overrides), out, log, {}, {}};
    if (m.command != "validate" && m.command != "counterexamples") {
      const auto rep = validate_config(cx.cfg());
      if (!rep.passed("base")) {
        std::string why;
        for (const auto& f : rep.failures()) why += (why.empty() ? "" : "; ") + f;
        throw Error(ErrorCode::InvalidArgument, "configuration fails validation: " + why);
      }
    }
    const std::string text = manifest_text(m, cx.loaded);
    cx.note("command", m.command);
    cx.note("preset", cx.cfg().name);
    cx.note("inputs_hash", hex64(fnv1a(text)));
    const int rc = it->second(cx);
    cx.note("exit_code", rc);
    cx.write("summary.txt", cx.summary.str());

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json j{{"command", m.command},
                     {"inputs_hash", hex64(fnv1a(text))},
                     {"config_hash", hex64(config_hash(cx.cfg()))},
                     {"inputs", text},
                     {"seed", m.seed},
                     {"workers", m.workers},
                     {"version", kVersion},
                     {"compiler", __VERSION__},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"wall_seconds", wall},
                     {"outputs", cx.files},
                     {"exit_code", rc}};
    write_json(out / "run_manifest.json", j);
    log << cx.summary.str();
    return rc;
  } catch (const Error& e) {
    return fail(to_string(e.code()), e.what(), 2);
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), 3);
  }
}

}  // namespace ddeopt
