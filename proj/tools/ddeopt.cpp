#include <iostream>

#include "CLI11.hpp"

#include "ddeopt/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ddeopt: optimal control of a delay growth model"};
  app.require_subcommand(1);

  ddeopt::ExperimentManifest m;
  std::vector<std::string> sets;
  bool no_synth = false;

  for (const auto& name : ddeopt::experiment_commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", m.config_path, "INI file")->check(CLI::ExistingFile);
    sub->add_option("--preset", m.preset, "builtin problem (default strong-blowup)");
    sub->add_option("--out", m.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", m.seed, "seed for sampled states and scans")->capture_default_str();
    sub->add_option("--workers", m.workers, "worker threads")->capture_default_str()->check(
        CLI::PositiveNumber);
    sub->add_option("--horizon", m.horizon, "horizon; 0 selects the command default");
    sub->add_option("--eps", m.eps, "target accuracy")->capture_default_str();
    sub->add_option("--set", sets, "override, e.g. numerics.n_hist=32 or state.eta0=2");
    if (name == "simulate")
      sub->add_option("--control", m.control, "constant consumption")->capture_default_str();
    if (name == "value") sub->add_option("--samples", m.samples, "property-scan states");
    if (name == "feedback" || name == "verify" || name.rfind("approx", 0) == 0)
      sub->add_option("--stride", m.stride, "closed-loop stride");
    if (name.rfind("approx", 0) == 0)
      sub->add_flag("--no-synthesize", no_synth, "stop after parameter choice and tables");
    sub->callback([&m, name] { m.command = name; });
  }

  CLI11_PARSE(app, argc, argv);

  m.synthesize = !no_synth;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "--set expects key=value, got '" << s << "'\n";
      return 3;
    }
    m.overrides[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return ddeopt::run(m, std::cout);
}
