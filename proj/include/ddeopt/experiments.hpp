#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddeopt/config_io.hpp"

namespace ddeopt {

struct ExperimentManifest {
  std::string command;  // simulate, value, feedback, verify, approx-nostate,
                        // approx-pointwise, approx-combined, counterexamples, validate
  std::string config_path;
  std::string out_dir = "out";
  std::string preset;
  std::uint64_t seed = 1;
  int workers = 1;
  double horizon = 0.0;  // <= 0 selects the command default
  double eps = 0.05;
  double control = 0.1;  // constant consumption for simulate
  int samples = 0;       // property-scan states for value
  int stride = 0;        // closed-loop stride, <= 0 uses numerics
  bool synthesize = true;
  Overrides overrides;
};

const std::vector<std::string>& experiment_commands();

// Exit codes: 0 success, 1 the command ran but its check failed, 2 module
// error (error.json written), 3 any other failure.
int run(const ExperimentManifest& m, std::ostream& log);

// fixed "%.17g" formatting used by every emitted table
std::string format_number(double v);

}  // namespace ddeopt
