// JSON run configuration: loading, dotted-path overrides and conversion into
// a simulator configuration. Unknown keys are rejected.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netopt/engine.hpp"

namespace netopt {

struct OutputOptions {
  std::string dir = ".";
  std::string format = "csv";  ///< csv or json
  std::string prefix = "run";
};

struct ExperimentOptions {
  int replicas = 1;
  int threads = 1;
  double tail_fraction = 0.1;
  /// Verify Q-window connectivity over the horizon before running.
  bool verify_topology = true;
  /// Attach empirical verdicts to the bound report.
  bool verdicts = true;
  /// Iterations at which the finite-time bound is sampled.
  std::vector<Iteration> times;
  /// Declared moment bounds that replace the noise model's own.
  std::optional<std::vector<double>> declared_nu;
  std::optional<std::vector<double>> declared_mu;
};

struct RunConfig {
  SimConfig sim;
  OutputOptions output;
  ExperimentOptions experiment;
  nlohmann::json document;  ///< the resolved document, after overrides
};

/// Parses a config file. Throws ConfigError with key "config" when unreadable.
nlohmann::json read_config(const std::string& path);

/// Applies `dotted.key=value`. The value is parsed as JSON and falls back to
/// a plain string. Intermediate objects are created as needed.
void apply_override(nlohmann::json& document, const std::string& assignment);
void set_path(nlohmann::json& document, const std::string& dotted_key, nlohmann::json value);

/// Builds the run configuration. Throws ConfigError naming the offending key.
RunConfig build_config(const nlohmann::json& document);

/// FNV-1a digest of the compact serialization, as 16 hex digits.
std::string config_digest(const nlohmann::json& document);

}  // namespace netopt
