#include "ddeopt/config_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <set>
#include <sstream>

#include "ddeopt/value_function.hpp"

namespace ddeopt {

namespace {

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw Error(ErrorCode::InvalidArgument, key + ": not a number: '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != static_cast<int>(d)) throw Error(ErrorCode::InvalidArgument, key + ": not an integer");
  return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::InvalidArgument, key + ": not a boolean: '" + v + "'");
}

}  // namespace

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

LoadedConfig load_config(const std::string& path, const std::string& preset_name,
                         const Overrides& overrides) {
  std::map<std::string, std::string> kv;
  if (!path.empty()) {
    boost::property_tree::ptree pt;
    try {
      boost::property_tree::read_ini(path, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw Error(ErrorCode::Io, e.what());
    }
    for (const auto& [section, body] : pt) {
      if (body.empty())
        throw Error(ErrorCode::InvalidArgument, "key '" + section + "' outside a section");
      for (const auto& [key, val] : body) kv[section + "." + key] = val.data();
    }
  }
  for (const auto& [k, v] : overrides) kv[k] = v;

  std::string name = preset_name;
  if (auto it = kv.find("problem.preset"); it != kv.end()) name = it->second;
  if (name.empty()) name = "strong-blowup";
  kv["problem.preset"] = name;

  LoadedConfig out;
  ProblemConfig& cfg = out.problem;
  cfg = preset(name);
  Numerics& nm = cfg.numerics;

  const std::map<std::string, int*> ints{{"numerics.n_hist", &nm.n_hist},
                                         {"numerics.substeps", &nm.substeps},
                                         {"numerics.knots", &nm.knots},
                                         {"numerics.max_iter", &nm.max_iter},
                                         {"numerics.feedback_stride", &nm.feedback_stride}};
  const std::map<std::string, double*> reals{{"numerics.value_tol", &nm.value_tol},
                                             {"numerics.value_eps", &nm.value_eps},
                                             {"numerics.continuation", &nm.continuation},
                                             {"numerics.pos_tol_rel", &nm.pos_tol_rel},
                                             {"problem.r", &cfg.r},
                                             {"problem.rho", &cfg.rho},
                                             {"problem.T", &cfg.T},
                                             {"state.eta0", &out.state.eta0},
                                             {"state.eta1", &out.state.eta1}};
  const std::set<std::string> other{"problem.preset",   "problem.kernel", "problem.kernel_param",
                                    "problem.dynamics", "problem.alpha",  "problem.beta",
                                    "problem.cap",      "problem.s",      "problem.u1_gamma",
                                    "problem.u2",       "problem.u2_n",   "problem.delay",
                                    "state.sample"};

  for (const auto& [k, v] : kv) {
    if (auto it = ints.find(k); it != ints.end())
      *it->second = to_int(k, v);
    else if (auto jt = reals.find(k); jt != reals.end())
      *jt->second = to_double(k, v);
    else if (!other.count(k))
      throw Error(ErrorCode::InvalidArgument, "unknown configuration key '" + k + "'");
  }
  auto get = [&](const std::string& k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto real = [&](const std::string& k, double fallback) {
    const auto* v = get(k);
    return v ? to_double(k, *v) : fallback;
  };

  if (const auto* d = get("problem.dynamics")) {
    if (*d == "saturating")
      cfg.dynamics = saturating_dynamics(real("problem.alpha", 0.5), real("problem.cap", 10.0),
                                         real("problem.beta", 0.3));
    else if (*d == "smooth-saturating")
      cfg.dynamics = smooth_saturating_dynamics(real("problem.alpha", 0.25),
                                                real("problem.s", 0.1), real("problem.beta", 0.1));
    else if (*d == "linear")
      cfg.dynamics = linear_dynamics(real("problem.alpha", 0.0), real("problem.beta", 1.0));
    else
      throw Error(ErrorCode::InvalidArgument, "problem.dynamics: unknown '" + *d + "'");
  } else if (get("problem.alpha") || get("problem.beta") || get("problem.cap") || get("problem.s")) {
    throw Error(ErrorCode::InvalidArgument, "dynamics parameters need problem.dynamics");
  }
  if (const auto* g = get("problem.u1_gamma")) {
    const double gamma = to_double("problem.u1_gamma", *g);
    cfg.u1 = gamma == 0.0 ? linear_utility() : power_ratio_utility(gamma);
  }
  if (const auto* u = get("problem.u2")) {
    const double n = real("problem.u2_n", 1.0);
    if (*u == "zero")
      cfg.u2 = zero_state_utility();
    else if (*u == "inverse")
      cfg.u2 = inverse_state_utility(n);
    else if (*u == "inverse-square")
      cfg.u2 = inverse_square_state_utility(n);
    else
      throw Error(ErrorCode::InvalidArgument, "problem.u2: unknown '" + *u + "'");
  }
  if (const auto* d = get("problem.delay")) {
    if (*d == "distributed")
      cfg.delay = DelayKind::Distributed;
    else if (*d == "pointwise")
      cfg.delay = DelayKind::Pointwise;
    else
      throw Error(ErrorCode::InvalidArgument, "problem.delay: unknown '" + *d + "'");
  }
  if (const auto* k = get("problem.kernel")) {
    cfg.kernel.family = *k;
    cfg.kernel.param = get("problem.kernel_param") ? to_int("problem.kernel_param",
                                                            *get("problem.kernel_param"))
                                                   : 1;
  }
  regrid(cfg, nm.n_hist, nm.substeps);
  if (const auto* s = get("state.sample")) out.state.sample = to_bool("state.sample", *s);

  std::ostringstream text;
  for (const auto& [k, v] : kv) text << k << '=' << v << '\n';
  out.text = text.str();
  return out;
}

HistoryState initial_state(const LoadedConfig& cfg, std::uint64_t seed) {
  if (cfg.state.sample) return sample_state(cfg.problem, seed);
  HistoryState eta = HistoryState::constant(cfg.problem.n_hist(), cfg.state.eta1);
  eta.eta0 = cfg.state.eta0;
  check_history(cfg.problem, eta);
  return eta;
}

}  // namespace ddeopt
