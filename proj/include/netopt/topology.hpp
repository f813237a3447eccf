// Time-varying communication graphs and the Q-window strong-connectivity test.
#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "netopt/core.hpp"

namespace netopt {

/// Dense agent index in [0, m).
using AgentId = std::size_t;

/// Directed link: the iterate of `from` reaches `to`.
struct Edge {
  AgentId from;
  AgentId to;
  auto operator<=>(const Edge&) const = default;
};

/// Edge set E_k over m agents. Self-loops are always present.
class EdgeSet {
 public:
  explicit EdgeSet(std::size_t agents);
  EdgeSet(std::size_t agents, std::span<const Edge> edges);

  /// Adds both (a, b) and (b, a) for every listed pair.
  static EdgeSet undirected(std::size_t agents, std::span<const Edge> links);
  static EdgeSet complete(std::size_t agents);
  static EdgeSet ring(std::size_t agents);
  static EdgeSet path(std::size_t agents);
  static EdgeSet star(std::size_t agents);

  std::size_t agents() const noexcept { return agents_; }
  bool contains(AgentId from, AgentId to) const;
  void insert(Edge e);

  /// N_i: agents whose iterates reach i, in increasing order; always contains i.
  std::vector<AgentId> in_neighbors(AgentId i) const;
  /// Number of agents j != i with (j, i) present.
  std::size_t degree(AgentId i) const;
  /// Inter-agent edges (self-loops omitted), sorted.
  std::vector<Edge> links() const;
  bool symmetric() const;

  EdgeSet& operator|=(const EdgeSet& other);
  bool operator==(const EdgeSet& other) const = default;

 private:
  std::size_t agents_;
  std::vector<unsigned char> adjacency_;  // [to * m + from]
};

/// Strong connectivity of the digraph by forward and reverse reachability from agent 0.
bool strongly_connected(const EdgeSet& edges);

enum class ScheduleKind { kStatic, kPeriodic, kRandom };

/// Whether a factory enforces the Q-window connectivity condition on the
/// deterministic schedule kinds. `kSkip` exists for diagnostics and for the
/// CLI, which reports violations through `verify_schedule` instead.
enum class Validation { kRequire, kSkip };

/// Generator of E_k for k >= 1. Immutable and cheap to copy; E_k for the
/// random kind is a pure function of (seed, k).
class TopologySchedule {
 public:
  static TopologySchedule fixed(EdgeSet edges, int window = 1,
                                Validation validation = Validation::kRequire);
  /// E_k = phases[(k - 1) mod L].
  static TopologySchedule periodic(std::vector<EdgeSet> phases, int window,
                                   Validation validation = Validation::kRequire);
  /// Each undirected link of `base` is active at iteration k independently
  /// with the given probability. Activated links are added in both directions.
  static TopologySchedule random(const EdgeSet& base, double activation, std::uint64_t seed,
                                 int window);

  EdgeSet edges(Iteration k) const;
  std::vector<AgentId> neighbors(Iteration k, AgentId i) const;

  ScheduleKind kind() const noexcept { return kind_; }
  std::size_t agents() const noexcept { return agents_; }
  int window() const noexcept { return window_; }
  /// Number of distinct phases for static/periodic kinds; 0 for random.
  std::size_t period() const noexcept { return phases_ ? phases_->size() : 0; }
  double activation() const noexcept { return activation_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  TopologySchedule() = default;

  ScheduleKind kind_ = ScheduleKind::kStatic;
  std::size_t agents_ = 0;
  int window_ = 1;
  std::shared_ptr<const std::vector<EdgeSet>> phases_;
  std::vector<Edge> base_links_;  // random kind, a < b
  double activation_ = 1.0;
  std::uint64_t seed_ = 0;
};

/// True iff the union E_{k_start+1} ∪ ... ∪ E_{k_start+window} is strongly connected.
bool is_q_connected(const TopologySchedule& schedule, Iteration k_start, int window);

/// Every k in [0, horizon - Q] whose Q-window fails; empty means the
/// connectivity condition holds over the horizon.
std::vector<Iteration> verify_schedule(const TopologySchedule& schedule, Iteration horizon);

}  // namespace netopt
