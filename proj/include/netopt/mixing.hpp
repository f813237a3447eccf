// Doubly stochastic weight matrices A(k), transition products Φ(k, s) and the
// geometric-rate certificate (θ, β).
#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "netopt/core.hpp"
#include "netopt/topology.hpp"

namespace netopt {

inline constexpr double kStochasticTolerance = 1e-12;

/// Names the first weight-assumption clause that `weights` violates, or
/// nullopt when all hold. Checked clauses: nonnegativity; zero weight off the
/// neighbor set (only when `edges` is given); unit row sums; weight at least
/// `eta` on every neighbor (only when `eta` > 0); unit column sums.
std::optional<std::string> weight_violation(const Matrix& weights, const EdgeSet* edges = nullptr,
                                            double eta = 0.0,
                                            double tolerance = kStochasticTolerance);

/// Square, nonnegative, doubly stochastic matrix. Construction validates and
/// throws AssumptionViolation naming the violated clause.
class MixingMatrix {
 public:
  explicit MixingMatrix(Matrix weights);

  const Matrix& matrix() const noexcept { return weights_; }
  std::size_t agents() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  double operator()(AgentId i, AgentId j) const {
    return weights_(static_cast<Index>(i), static_cast<Index>(j));
  }
  /// Smallest strictly positive entry.
  double min_positive() const;
  /// Nonzero pattern as an edge set: (j, i) present iff a_ij > 0.
  EdgeSet support() const;

 private:
  Matrix weights_;
};

/// a_ij = 1 / (1 + max(d_i, d_j)) on links, diagonal takes the remainder.
/// Requires a symmetric edge set.
MixingMatrix metropolis_weights(const EdgeSet& edges);

/// Equal weight 1 / (1 + d_max) on every link, diagonal takes the remainder
/// (max-degree rule). Doubly stochastic for symmetric edge sets.
MixingMatrix equal_neighbor_weights(const EdgeSet& edges);

/// Φ(k, s) = A(k) A(k-1) ... A(s+1), with `factors[t - 1]` holding A(t).
/// Φ(s, s) is the identity.
Matrix phi_product(std::span<const MixingMatrix> factors, Iteration k, Iteration s);

struct RateCertificate {
  double theta;
  double beta;
};

/// θ = (1 - η/(4m²))^-2, β = (1 - η/(4m²))^(1/Q).
RateCertificate rate_certificate(std::size_t agents, double eta, int window);

enum class WeightRule { kMetropolis, kEqualNeighbor, kExplicit };

/// Rule producing A(k) from the topology schedule, or an explicit periodic
/// list of matrices. Matrices of static and periodic schedules are built once.
class WeightSchedule {
 public:
  static WeightSchedule metropolis(TopologySchedule topology);
  static WeightSchedule equal_neighbor(TopologySchedule topology);
  /// A(k) = matrices[(k - 1) mod L]. Each matrix is validated against the
  /// corresponding topology phase; the topology must be static or periodic
  /// with a period dividing L, or L must be a multiple of it.
  static WeightSchedule explicit_list(std::vector<MixingMatrix> matrices, TopologySchedule topology);
  /// Topology taken from the nonzero pattern of each matrix.
  static WeightSchedule explicit_list(std::vector<MixingMatrix> matrices, int window,
                                      Validation validation = Validation::kRequire);

  MixingMatrix at(Iteration k) const;
  /// A(k) without copying when the schedule is cached; nullptr for random topologies.
  const MixingMatrix* cached_at(Iteration k) const;
  const TopologySchedule& topology() const noexcept { return topology_; }
  WeightRule rule() const noexcept { return rule_; }
  std::size_t agents() const noexcept { return topology_.agents(); }

  /// Lower bound η on positive weights over A(1..horizon); exact for static
  /// and periodic schedules. A single agent has the lone weight 1, which every
  /// η in (0, 1) bounds; 1/2 is returned there.
  double eta(Iteration horizon) const;
  RateCertificate certificate(Iteration horizon) const;

 private:
  WeightSchedule(WeightRule rule, TopologySchedule topology) : rule_(rule), topology_(std::move(topology)) {}
  MixingMatrix build(const EdgeSet& edges) const;

  WeightRule rule_;
  TopologySchedule topology_;
  std::shared_ptr<const std::vector<MixingMatrix>> cached_;
};

struct GeometricRateReport {
  double theta = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  Iteration start = 0;
  Iteration horizon = 0;
  /// max over k of (max_ij |Φ(k,s)_ij - 1/m|) / (θ β^(k-s)).
  double worst_ratio = 0.0;
  /// max_ij |Φ(k,s)_ij - 1/m| for k = s+1 .. horizon.
  std::vector<double> deviations;
  /// Values of k where the deviation exceeded the bound.
  std::vector<Iteration> violations;

  bool holds() const noexcept { return violations.empty(); }
};

GeometricRateReport verify_geometric_rate(const WeightSchedule& schedule, Iteration start,
                                          Iteration horizon);

void to_json(nlohmann::json& j, const GeometricRateReport& report);

}  // namespace netopt
