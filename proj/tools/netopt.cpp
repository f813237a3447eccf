// netopt: run, bound and sweep consensus subgradient experiments.
#include <iostream>

#include <CLI11.hpp>

#include "netopt/commands.hpp"

namespace {

void add_common(CLI::App* cmd, netopt::CommonOptions& options) {
  cmd->add_option("-c,--config", options.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--set", options.overrides, "override a dotted key, e.g. --set stepsize.a=0.05");
  cmd->add_option("--replicas", options.replicas, "Monte Carlo replicas")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", options.seed, "root seed");
  cmd->add_option("--out-dir", options.out_dir, "output directory (default $NETOPT_OUT_DIR or .)");
  cmd->add_option("--format", options.format, "trace format")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed consensus + projected stochastic subgradient simulator"};
  app.require_subcommand(1);

  netopt::CommonOptions options;
  netopt::BoundsOptions bounds;
  netopt::SweepOptions sweep;

  auto* run = app.add_subcommand("run", "simulate one realization or a Monte Carlo batch");
  add_common(run, options);

  auto* bound = app.add_subcommand("bounds", "evaluate the closed-form bounds without simulating");
  add_common(bound, options);
  bound->add_option("--eps", bounds.eps, "target accuracy for the stopping rule");
  bound->add_option("--trace", bounds.trace, "summary JSON of a completed run")->check(CLI::ExistingFile);

  auto* sw = app.add_subcommand("sweep", "one summary row per parameter value");
  add_common(sw, options);
  sw->add_option("--param", sweep.parameter, "alpha, sigma, m, Q or eta")->required();
  sw->add_option("--values", sweep.values, "values to sweep, space or comma separated")->expected(0, -1)->delimiter(',');
  sw->add_flag("--bounds-only", sweep.bounds_only, "skip the simulations");

  auto* topo = app.add_subcommand("check-topology", "verify Q-window connectivity and the mixing rate");
  add_common(topo, options);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : netopt::kExitConfig;
  }

  if (*run) return netopt::cmd_run(options, std::cout, std::cerr);
  if (*bound) return netopt::cmd_bounds(options, bounds, std::cout, std::cerr);
  if (*sw) return netopt::cmd_sweep(options, sweep, std::cout, std::cerr);
  return netopt::cmd_check_topology(options, std::cout, std::cerr);
}
