#include "netopt/topology.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace netopt {

EdgeSet::EdgeSet(std::size_t agents) : agents_(agents), adjacency_(agents * agents, 0) {
  if (agents == 0) throw std::invalid_argument("edge set needs at least one agent");
  for (AgentId i = 0; i < agents; ++i) adjacency_[i * agents + i] = 1;
}

EdgeSet::EdgeSet(std::size_t agents, std::span<const Edge> edges) : EdgeSet(agents) {
  for (const Edge& e : edges) insert(e);
}

EdgeSet EdgeSet::undirected(std::size_t agents, std::span<const Edge> links) {
  EdgeSet out(agents);
  for (const Edge& e : links) {
    out.insert(e);
    out.insert({e.to, e.from});
  }
  return out;
}

EdgeSet EdgeSet::complete(std::size_t agents) {
  EdgeSet out(agents);
  std::fill(out.adjacency_.begin(), out.adjacency_.end(), 1);
  return out;
}

EdgeSet EdgeSet::ring(std::size_t agents) {
  EdgeSet out(agents);
  if (agents < 2) return out;
  for (AgentId i = 0; i < agents; ++i) {
    const AgentId next = (i + 1) % agents;
    out.insert({i, next});
    out.insert({next, i});
  }
  return out;
}

EdgeSet EdgeSet::path(std::size_t agents) {
  EdgeSet out(agents);
  for (AgentId i = 0; i + 1 < agents; ++i) {
    out.insert({i, i + 1});
    out.insert({i + 1, i});
  }
  return out;
}

EdgeSet EdgeSet::star(std::size_t agents) {
  EdgeSet out(agents);
  for (AgentId i = 1; i < agents; ++i) {
    out.insert({0, i});
    out.insert({i, 0});
  }
  return out;
}

bool EdgeSet::contains(AgentId from, AgentId to) const {
  if (from >= agents_ || to >= agents_) return false;
  return adjacency_[to * agents_ + from] != 0;
}

void EdgeSet::insert(Edge e) {
  if (e.from >= agents_ || e.to >= agents_) {
    throw std::out_of_range("edge (" + std::to_string(e.from) + ", " + std::to_string(e.to) +
                            ") outside agent range " + std::to_string(agents_));
  }
  adjacency_[e.to * agents_ + e.from] = 1;
}

std::vector<AgentId> EdgeSet::in_neighbors(AgentId i) const {
  std::vector<AgentId> out;
  for (AgentId j = 0; j < agents_; ++j)
    if (adjacency_[i * agents_ + j]) out.push_back(j);
  return out;
}

std::size_t EdgeSet::degree(AgentId i) const {
  std::size_t d = 0;
  for (AgentId j = 0; j < agents_; ++j)
    if (j != i && adjacency_[i * agents_ + j]) ++d;
  return d;
}

std::vector<Edge> EdgeSet::links() const {
  std::vector<Edge> out;
  for (AgentId from = 0; from < agents_; ++from)
    for (AgentId to = 0; to < agents_; ++to)
      if (from != to && contains(from, to)) out.push_back({from, to});
  return out;
}

bool EdgeSet::symmetric() const {
  for (AgentId i = 0; i < agents_; ++i)
    for (AgentId j = i + 1; j < agents_; ++j)
      if (contains(i, j) != contains(j, i)) return false;
  return true;
}

EdgeSet& EdgeSet::operator|=(const EdgeSet& other) {
  if (other.agents_ != agents_) throw std::invalid_argument("edge set size mismatch");
  for (std::size_t idx = 0; idx < adjacency_.size(); ++idx) adjacency_[idx] |= other.adjacency_[idx];
  return *this;
}

namespace {

// Number of agents reachable from agent 0 following edges forward (or backward).
std::size_t reachable_from_root(const EdgeSet& edges, bool reverse) {
  const std::size_t m = edges.agents();
  std::vector<unsigned char> seen(m, 0);
  std::vector<AgentId> queue{0};
  seen[0] = 1;
  std::size_t count = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const AgentId u = queue[head];
    for (AgentId w = 0; w < m; ++w) {
      const bool linked = reverse ? edges.contains(w, u) : edges.contains(u, w);
      if (linked && !seen[w]) {
        seen[w] = 1;
        ++count;
        queue.push_back(w);
      }
    }
  }
  return count;
}

void require_window(int window) {
  if (window < 1) throw std::invalid_argument("connectivity window Q must be >= 1");
}

}  // namespace

bool strongly_connected(const EdgeSet& edges) {
  const std::size_t m = edges.agents();
  return reachable_from_root(edges, false) == m && reachable_from_root(edges, true) == m;
}

TopologySchedule TopologySchedule::fixed(EdgeSet edges, int window, Validation validation) {
  return periodic(std::vector<EdgeSet>{std::move(edges)}, window, validation);
}

TopologySchedule TopologySchedule::periodic(std::vector<EdgeSet> phases, int window,
                                            Validation validation) {
  require_window(window);
  if (phases.empty()) throw std::invalid_argument("periodic schedule needs at least one phase");
  const std::size_t m = phases.front().agents();
  for (const EdgeSet& e : phases)
    if (e.agents() != m) throw std::invalid_argument("periodic schedule phases differ in size");

  TopologySchedule out;
  out.kind_ = phases.size() == 1 ? ScheduleKind::kStatic : ScheduleKind::kPeriodic;
  out.agents_ = m;
  out.window_ = window;
  out.phases_ = std::make_shared<const std::vector<EdgeSet>>(std::move(phases));

  if (validation == Validation::kRequire) {
    // Windows starting at k and k + L coincide, so one period of starts suffices.
    const auto period = static_cast<Iteration>(out.phases_->size());
    for (Iteration k = 0; k < period; ++k) {
      if (!is_q_connected(out, k, window)) {
        throw AssumptionViolation("union of E_" + std::to_string(k + 1) + " .. E_" +
                                  std::to_string(k + window) +
                                  " is not strongly connected (window Q = " +
                                  std::to_string(window) + ")");
      }
    }
  }
  return out;
}

TopologySchedule TopologySchedule::random(const EdgeSet& base, double activation,
                                          std::uint64_t seed, int window) {
  require_window(window);
  if (!(activation >= 0.0 && activation <= 1.0))
    throw std::invalid_argument("activation probability must lie in [0, 1]");
  if (!base.symmetric()) throw std::invalid_argument("random schedule needs a symmetric base graph");
  TopologySchedule out;
  out.kind_ = ScheduleKind::kRandom;
  out.agents_ = base.agents();
  out.window_ = window;
  out.activation_ = activation;
  out.seed_ = seed;
  for (const Edge& e : base.links())
    if (e.from < e.to) out.base_links_.push_back(e);
  return out;
}

EdgeSet TopologySchedule::edges(Iteration k) const {
  if (k < 1) throw std::invalid_argument("edge sets are defined for k >= 1");
  if (kind_ != ScheduleKind::kRandom) {
    const auto period = static_cast<Iteration>(phases_->size());
    return (*phases_)[static_cast<std::size_t>((k - 1) % period)];
  }
  EdgeSet out(agents_);
  for (std::size_t idx = 0; idx < base_links_.size(); ++idx) {
    CounterRng rng(seed_, StreamTag::kTopology, static_cast<std::uint64_t>(k), idx);
    if (rng.uniform() < activation_) {
      const Edge& e = base_links_[idx];
      out.insert(e);
      out.insert({e.to, e.from});
    }
  }
  return out;
}

std::vector<AgentId> TopologySchedule::neighbors(Iteration k, AgentId i) const {
  if (i >= agents_) throw std::out_of_range("agent id out of range");
  return edges(k).in_neighbors(i);
}

bool is_q_connected(const TopologySchedule& schedule, Iteration k_start, int window) {
  require_window(window);
  EdgeSet merged(schedule.agents());
  for (int l = 1; l <= window; ++l) merged |= schedule.edges(k_start + l);
  return strongly_connected(merged);
}

std::vector<Iteration> verify_schedule(const TopologySchedule& schedule, Iteration horizon) {
  const int q = schedule.window();
  if (horizon < q) throw std::invalid_argument("horizon must be at least the window Q");
  std::vector<Iteration> violations;
  if (schedule.kind() == ScheduleKind::kRandom) {
    for (Iteration k = 0; k <= horizon - q; ++k)
      if (!is_q_connected(schedule, k, q)) violations.push_back(k);
    return violations;
  }
  // Deterministic kinds repeat with the period; test one residue class each.
  const auto period = static_cast<Iteration>(schedule.period());
  std::vector<unsigned char> bad(static_cast<std::size_t>(period), 0);
  for (Iteration r = 0; r < period; ++r) bad[static_cast<std::size_t>(r)] = !is_q_connected(schedule, r, q);
  for (Iteration k = 0; k <= horizon - q; ++k)
    if (bad[static_cast<std::size_t>(k % period)]) violations.push_back(k);
  return violations;
}

}  // namespace netopt
