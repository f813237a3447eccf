// Synchronous simulation of the consensus + projected stochastic subgradient
// iteration, with per-iteration diagnostics and Monte Carlo aggregation.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "netopt/core.hpp"
#include "netopt/mixing.hpp"
#include "netopt/problem.hpp"
#include "netopt/stochastic.hpp"

namespace netopt {

/// Draw each w_{i,0} independently and uniformly from X.
struct UniformInitial {};

/// Explicit starting points, one column per agent (n x m).
using InitialIterates = std::variant<Matrix, UniformInitial>;

enum class CheckPolicy { kAbort, kWarn };

/// Runtime oracles evaluated along every realization.
struct CheckOptions {
  /// Every w_{i,k} lies in X.
  bool feasibility = true;
  /// ||p_{i,k+1}|| <= α_{k+1} (C_i + ||ε_{i,k+1}||).
  bool displacement = false;
  /// The per-realization disagreement estimate on ||y_{k+1} - w_{j,k+1}||.
  bool disagreement_bound = false;
  /// Number of random iterations at which the iterate relation on
  /// Σ_i ||v_{i,k+1} - z||^2 is evaluated, and points z per iteration.
  int iterate_relation_samples = 0;
  int iterate_relation_points = 5;
  double tolerance = 1e-9;
  CheckPolicy policy = CheckPolicy::kAbort;
};

struct RecordOptions {
  /// Record k = 1, the multiples of `stride`, and the final iteration.
  Iteration stride = 1;
  /// Also store w_{j,k} for every recorded row.
  bool iterates = false;
};

struct SimConfig {
  Problem problem;
  WeightSchedule weights;
  NoiseModel noise;
  StepsizeSchedule stepsize;
  Iteration horizon;
  InitialIterates initial = UniformInitial{};
  std::uint64_t seed = 0;
  CheckOptions checks = {};
  RecordOptions record = {};
  /// Overrides the computed subgradient bounds C_i.
  std::optional<std::vector<double>> subgradient_bounds = std::nullopt;
};

/// Iterates at the end of iteration k. Columns are agents.
struct SimState {
  Iteration k = 0;
  Matrix w;  ///< w_{i,k}
  Matrix v;  ///< v_{i,k-1}, the mixed points that produced w (empty at k = 0)
  Vector y;  ///< (1/m) Σ_i w_{i,k}
  std::uint64_t seed = 0;  ///< noise stream of this realization
};

/// v_{i} = Σ_j a_{ij} w_j, columns are agents.
Matrix mix(const Matrix& iterates, const MixingMatrix& weights);

/// ||y_k - w_{j,k}|| per agent.
std::vector<double> disagreement(const SimState& state);

struct StepRecord {
  double alpha = 0.0;
  Matrix errors;  ///< ε_{i,k+1}, columns are agents
  std::vector<double> displacement;  ///< ||p_{i,k+1}||
};

struct CheckReport {
  Iteration feasibility_violations = 0;
  Iteration displacement_checked = 0;
  Iteration displacement_violations = 0;
  Iteration disagreement_checked = 0;
  Iteration disagreement_violations = 0;
  Iteration relation_checked = 0;
  Iteration relation_violations = 0;
  /// Largest observed lhs / rhs for the disagreement estimate.
  double disagreement_worst_ratio = 0.0;
  std::vector<std::string> messages;  ///< first few violations

  Iteration violations() const noexcept {
    return feasibility_violations + displacement_violations + disagreement_violations + relation_violations;
  }
  bool passed() const noexcept { return violations() == 0; }
  void merge(const CheckReport& other);
};

enum class Metric { kDisagreement, kIterateValue, kAverageValue, kStepNorm };

/// Per-iteration diagnostics of one realization for recorded k = 1..K.
class RunTrace {
 public:
  RunTrace(std::size_t agents, Index dimension) : agents_(agents), dimension_(dimension) {}

  std::size_t agents() const noexcept { return agents_; }
  Index dimension() const noexcept { return dimension_; }
  std::size_t rows() const noexcept { return k_.size(); }

  Iteration k(std::size_t row) const { return k_.at(row); }
  double alpha(std::size_t row) const { return alpha_.at(row); }
  /// f(y_k)
  double network_value(std::size_t row) const { return f_y_.at(row); }
  double metric(Metric metric, std::size_t row, AgentId j) const;
  /// w_{j,k} at a recorded row (requires RecordOptions::iterates).
  Vector iterate(std::size_t row, AgentId j) const;
  bool has_iterates() const noexcept { return !iterates_.empty(); }

  Matrix initial;          ///< w_{i,0}
  Matrix first_average;    ///< v_{i,1}
  Matrix final_iterates;   ///< w_{i,K}
  Matrix final_averages;   ///< z_{i,K}
  Vector final_network_average;  ///< y_K
  CheckReport checks;
  std::uint64_t seed = 0;

 private:
  friend class Simulator;
  friend class TraceAccumulator;
  std::size_t agents_;
  Index dimension_;
  std::vector<Iteration> k_;
  std::vector<double> alpha_;
  std::vector<double> f_y_;
  std::vector<double> disagreement_;
  std::vector<double> f_w_;
  std::vector<double> f_z_;
  std::vector<double> step_norm_;
  std::vector<double> iterates_;
};

class Simulator {
 public:
  explicit Simulator(SimConfig config);

  const SimConfig& config() const noexcept { return config_; }
  std::size_t agents() const noexcept { return config_.problem.agents(); }
  /// C_i per agent; nullopt when some f_i has no uniform bound over X.
  const std::optional<std::vector<double>>& subgradient_bounds() const noexcept { return bounds_; }
  double eta() const noexcept { return eta_; }
  const RateCertificate& certificate() const noexcept { return certificate_; }

  /// Seed of replica r; replica 0 is what `run()` executes.
  std::uint64_t replica_seed(std::uint64_t replica) const;

  SimState initial_state(std::uint64_t seed) const;
  /// Advances `state` by one synchronous iteration.
  StepRecord step(SimState& state) const;

  RunTrace run() const { return run_seeded(replica_seed(0)); }
  RunTrace run_seeded(std::uint64_t seed) const;

 private:
  SimConfig config_;
  std::optional<std::vector<double>> bounds_;
  double eta_;
  RateCertificate certificate_;
};

RunTrace run(const SimConfig& config);

struct MetricStats {
  std::vector<double> mean;
  std::vector<double> se;
};

/// Per-iteration mean and standard error over replicas, plus per-replica tail
/// means over the final `tail_fraction` of the recorded rows.
struct AggregatedTrace {
  std::size_t agents = 0;
  std::size_t replicas = 0;
  double tail_fraction = 0.1;
  std::vector<Iteration> k;
  std::vector<double> alpha;
  MetricStats network_value;           ///< rows
  MetricStats disagreement;            ///< rows x agents
  MetricStats iterate_value;           ///< rows x agents
  MetricStats average_value;           ///< rows x agents
  MetricStats step_norm;               ///< rows x agents
  std::vector<double> tail_disagreement;   ///< replicas x agents
  std::vector<double> tail_average_value;  ///< replicas x agents
  CheckReport checks;
  std::vector<std::uint64_t> seeds;

  std::size_t rows() const noexcept { return k.size(); }
  std::size_t tail_start() const noexcept;
  const MetricStats& stats(Metric metric) const;
};

/// Folds realizations, in the order given, into an AggregatedTrace.
class TraceAccumulator {
 public:
  TraceAccumulator(std::size_t agents, double tail_fraction = 0.1);
  ~TraceAccumulator();
  TraceAccumulator(TraceAccumulator&&) noexcept;
  TraceAccumulator& operator=(TraceAccumulator&&) noexcept;

  void add(const RunTrace& trace);
  std::size_t count() const noexcept { return out_.replicas; }
  AggregatedTrace finish() const;

 private:
  class Series;
  AggregatedTrace out_;
  std::vector<Series> series_;  // f_y, disagreement, f_w, f_z, step norm
};

struct MonteCarloOptions {
  int threads = 1;
  double tail_fraction = 0.1;
  /// Called with each realization in replica order.
  std::function<void(std::size_t replica, const RunTrace& trace)> on_trace;
};

AggregatedTrace monte_carlo(const SimConfig& config, int replicas, const MonteCarloOptions& options = {});

}  // namespace netopt
