// Subcommands of the netopt binary. Each returns the process exit status:
// 0 success, 1 configuration error, 2 check or verdict failure.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "netopt/config.hpp"

namespace netopt {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitCheck = 2;

/// Environment variable holding the default output directory.
constexpr const char* kOutDirEnv = "NETOPT_OUT_DIR";

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;  ///< dotted key=value
  std::optional<int> replicas;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
};

/// Reads the file, applies flags and overrides, and builds the configuration.
RunConfig load_config(const CommonOptions& options);

int cmd_run(const CommonOptions& options, std::ostream& out, std::ostream& err);

struct BoundsOptions {
  std::optional<double> eps;
  /// Summary JSON of a completed run supplying the realized initial data.
  std::optional<std::string> trace;
};

int cmd_bounds(const CommonOptions& options, const BoundsOptions& bounds, std::ostream& out, std::ostream& err);

struct SweepOptions {
  std::string parameter;  ///< alpha, sigma, m, Q or eta
  std::vector<double> values;
  /// Evaluate the closed-form bounds only, without simulating.
  bool bounds_only = false;
};

int cmd_sweep(const CommonOptions& options, const SweepOptions& sweep, std::ostream& out, std::ostream& err);

int cmd_check_topology(const CommonOptions& options, std::ostream& out, std::ostream& err);

}  // namespace netopt
