#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ddeopt/core_model.hpp"

namespace ddeopt {

// INI layout:
//   [problem]  preset, r, rho, T, kernel (ramp|uniform|gaussian), kernel_param,
//              dynamics (saturating|smooth-saturating|linear), alpha, beta, cap,
//              u1_gamma (0 selects linear), u2 (zero|inverse|inverse-square), u2_n,
//              delay (distributed|pointwise)
//   [numerics] any Numerics field by name
//   [state]    eta0, eta1 (constant history) or sample = true
struct StateSpec {
  double eta0 = 1.0;
  double eta1 = 1.0;
  bool sample = false;
};

struct LoadedConfig {
  ProblemConfig problem;
  StateSpec state;
  std::string text;  // normalized "section.key=value" lines, hashed into the run manifest
};

using Overrides = std::map<std::string, std::string>;

// Starts from preset_name (or [problem] preset), then the file, then overrides
// ("numerics.n_hist", "state.eta0", ...). Empty path: preset plus overrides.
LoadedConfig load_config(const std::string& path, const std::string& preset_name,
                         const Overrides& overrides = {});

HistoryState initial_state(const LoadedConfig& cfg, std::uint64_t seed);

std::uint64_t fnv1a(const std::string& s);
std::string hex64(std::uint64_t v);

}  // namespace ddeopt
