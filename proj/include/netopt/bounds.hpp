// Closed-form performance bounds of the consensus subgradient method, the
// ε-optimality stopping rule, and comparison against Monte Carlo estimates.
#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netopt/core.hpp"
#include "netopt/engine.hpp"

namespace netopt {

struct BoundInputs {
  std::size_t agents = 1;
  double theta = 1.0;
  double beta = 0.5;
  double eta = 0.5;
  int window = 1;
  std::vector<double> c;   ///< subgradient bounds C_i
  std::vector<double> nu;  ///< rms error bounds ν̄_i
  std::vector<double> mu;  ///< limsup ||E ε_{i,k}||, μ̄_i
  double alpha = 0.0;      ///< stepsize limit
  double diameter = std::numeric_limits<double>::infinity();
  double initial_distance_sq = 0.0;  ///< Σ_i ||v_{i,1} - x*||^2
  double max_initial_norm = 0.0;     ///< max_i ||w_{i,0}||

  /// Throws std::invalid_argument on malformed inputs and β outside (0, 1).
  void validate() const;
  double max_c() const;
  double max_c_nu() const;  ///< max_i (C_i + ν̄_i)
  double mu_sum() const;
  /// mθβ / (1 - β)
  double network_factor() const;
};

/// limsup E||y_{k+1} - w_{j,k+1}||
double disagreement_bound(const BoundInputs& in);
/// m α (max(C_i + ν̄_i))^2 (9/2 + 2mθβ/(1-β)) at the given α.
double function_value_alpha_term(const BoundInputs& in, double alpha);
/// Excess over f* of liminf E f(w_{j,k}).
double function_value_bound(const BoundInputs& in);
/// Excess over f* of limsup E f(z_{j,t}); the same expression as above.
double averaged_bound(const BoundInputs& in);
/// Excess over f* of E f(z_{j,t}) after t iterations at constant stepsize α.
double finite_time_bound(const BoundInputs& in, Iteration t, double alpha);

struct StoppingRule {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double eps = 0.0;
  double psi = 0.0;
  double alpha = 0.0;
  Iteration iterations = 0;
};

/// ψ solves B ψ^2 + 2 sqrt(AC) ψ = ε; α = sqrt(A) ψ / sqrt(C); N = ceil(1/ψ^2).
StoppingRule stopping_rule(double a, double b, double c, double eps);

struct RunConstants {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// A = ½ Σ||v_{i,1} - x*||^2, B = (2m²θβ²/(1-β)) max C_i max||w_{i,0}||,
/// C = m (max(C_i+ν̄_i))^2 (9/2 + 2mθβ/(1-β)).
RunConstants run_constants(const BoundInputs& in);

/// Inputs from a configured simulator; initial quantities stay zero without a trace.
BoundInputs bound_inputs(const Simulator& sim);
/// Adds the realized initial data of `trace` relative to x*.
BoundInputs bound_inputs(const Simulator& sim, const RunTrace& trace, const Vector& x_star);

RunConstants constants_from_run(const SimConfig& config, const RunTrace& trace, const Vector& x_star);

enum class BoundKind { kLimsup, kLiminf, kFiniteTime };

struct BoundEntry {
  std::string name;
  BoundKind kind = BoundKind::kLimsup;
  double value = 0.0;
  /// Iteration for finite-time entries.
  Iteration t = 0;
  /// Value used for the verdict when the stepsize has not reached its limit.
  std::optional<double> evaluated;
  std::optional<double> empirical;
  std::optional<double> standard_error;
  std::optional<double> margin;
  std::optional<bool> pass;
  std::string note;
};

struct BoundReport {
  BoundInputs inputs;
  std::vector<BoundEntry> entries;
  std::optional<double> f_star;
  std::optional<StoppingRule> stopping;
  std::optional<RunConstants> constants;
  std::vector<std::string> flags;

  const BoundEntry& entry(const std::string& name) const;
  BoundEntry& entry(const std::string& name);
  /// All attached verdicts pass (vacuously true without any).
  bool passed() const;
};

/// Disagreement, function-value and averaged bounds, plus finite-time samples
/// at `times` when the stepsize is constant and positive with zero-mean errors.
BoundReport evaluate_bounds(const BoundInputs& in, std::optional<double> f_star,
                            const std::vector<Iteration>& times = {});

struct EmpiricalOptions {
  double slack_se = 3.0;
  std::size_t min_replicas = 30;
  /// Evaluate asymptotic bounds at the stepsize of the first tail row when it
  /// exceeds the declared limit.
  bool finite_horizon_alpha = true;
};

/// Attaches empirical statistics, margins (bound - empirical + slack·SE) and
/// verdicts. Function-value entries get no verdict when f* is unknown.
void bound_vs_empirical(BoundReport& report, const AggregatedTrace& trace, const EmpiricalOptions& options = {});

void to_json(nlohmann::json& j, const BoundInputs& in);
void to_json(nlohmann::json& j, const StoppingRule& rule);
void to_json(nlohmann::json& j, const RunConstants& constants);
void to_json(nlohmann::json& j, const BoundEntry& entry);
void to_json(nlohmann::json& j, const BoundReport& report);

}  // namespace netopt
