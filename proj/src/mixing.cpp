#include "netopt/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace netopt {

std::optional<std::string> weight_violation(const Matrix& weights, const EdgeSet* edges, double eta,
                                            double tolerance) {
  if (weights.rows() != weights.cols() || weights.rows() == 0)
    return "weight matrix must be square and nonempty";
  const Index m = weights.rows();
  if (edges && static_cast<Index>(edges->agents()) != m)
    return "weight matrix size does not match the agent count";
  if (!weights.allFinite()) return "nonnegativity: non-finite weight";

  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      const double a = weights(i, j);
      if (a < 0.0) {
        return "nonnegativity: a(" + std::to_string(i) + "," + std::to_string(j) + ") = " +
               std::to_string(a) + " < 0";
      }
      if (edges && !edges->contains(static_cast<AgentId>(j), static_cast<AgentId>(i)) && a != 0.0) {
        return "neighbor support: a(" + std::to_string(i) + "," + std::to_string(j) +
               ") > 0 but " + std::to_string(j) + " is not a neighbor of " + std::to_string(i);
      }
    }
  }
  for (Index i = 0; i < m; ++i) {
    const double s = weights.row(i).sum();
    if (std::abs(s - 1.0) > tolerance)
      return "row stochasticity: row " + std::to_string(i) + " sums to " + std::to_string(s);
  }
  if (eta > 0.0) {
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < m; ++j) {
        const bool neighbor = edges ? edges->contains(static_cast<AgentId>(j), static_cast<AgentId>(i))
                                    : weights(i, j) > 0.0;
        if (neighbor && weights(i, j) < eta - tolerance) {
          return "uniform lower bound: a(" + std::to_string(i) + "," + std::to_string(j) + ") = " +
                 std::to_string(weights(i, j)) + " < eta = " + std::to_string(eta);
        }
      }
    }
  }
  for (Index j = 0; j < m; ++j) {
    const double s = weights.col(j).sum();
    if (std::abs(s - 1.0) > tolerance)
      return "column stochasticity: column " + std::to_string(j) + " sums to " + std::to_string(s);
  }
  return std::nullopt;
}

MixingMatrix::MixingMatrix(Matrix weights) : weights_(std::move(weights)) {
  if (auto violation = weight_violation(weights_)) throw AssumptionViolation(*violation);
}

double MixingMatrix::min_positive() const {
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < weights_.size(); ++i) {
    const double a = weights_.data()[i];
    if (a > 0.0) best = std::min(best, a);
  }
  return best;
}

EdgeSet MixingMatrix::support() const {
  const std::size_t m = agents();
  EdgeSet out(m);
  for (AgentId i = 0; i < m; ++i)
    for (AgentId j = 0; j < m; ++j)
      if ((*this)(i, j) > 0.0) out.insert({j, i});
  return out;
}

MixingMatrix metropolis_weights(const EdgeSet& edges) {
  if (!edges.symmetric())
    throw std::invalid_argument("Metropolis weights need a symmetric (undirected) edge set");
  const std::size_t m = edges.agents();
  std::vector<std::size_t> degree(m);
  for (AgentId i = 0; i < m; ++i) degree[i] = edges.degree(i);

  Matrix a = Matrix::Zero(static_cast<Index>(m), static_cast<Index>(m));
  for (AgentId i = 0; i < m; ++i) {
    double off = 0.0;
    for (AgentId j = 0; j < m; ++j) {
      if (j == i || !edges.contains(j, i)) continue;
      const double w = 1.0 / (1.0 + static_cast<double>(std::max(degree[i], degree[j])));
      a(static_cast<Index>(i), static_cast<Index>(j)) = w;
      off += w;
    }
    a(static_cast<Index>(i), static_cast<Index>(i)) = 1.0 - off;
  }
  return MixingMatrix(std::move(a));
}

MixingMatrix equal_neighbor_weights(const EdgeSet& edges) {
  if (!edges.symmetric())
    throw std::invalid_argument("equal-neighbor weights need a symmetric (undirected) edge set");
  const std::size_t m = edges.agents();
  std::size_t max_degree = 0;
  for (AgentId i = 0; i < m; ++i) max_degree = std::max(max_degree, edges.degree(i));
  const double w = 1.0 / (1.0 + static_cast<double>(max_degree));

  Matrix a = Matrix::Zero(static_cast<Index>(m), static_cast<Index>(m));
  for (AgentId i = 0; i < m; ++i) {
    for (AgentId j = 0; j < m; ++j)
      if (j != i && edges.contains(j, i)) a(static_cast<Index>(i), static_cast<Index>(j)) = w;
    a(static_cast<Index>(i), static_cast<Index>(i)) = 1.0 - w * static_cast<double>(edges.degree(i));
  }
  return MixingMatrix(std::move(a));
}

Matrix phi_product(std::span<const MixingMatrix> factors, Iteration k, Iteration s) {
  if (k < s) throw std::invalid_argument("phi_product needs k >= s");
  if (s < 0 || k > static_cast<Iteration>(factors.size()))
    throw std::out_of_range("phi_product: factors do not cover A(s+1) .. A(k)");
  if (factors.empty()) throw std::invalid_argument("phi_product needs at least one factor");
  const Index m = factors.front().matrix().rows();
  Matrix product = Matrix::Identity(m, m);
  for (Iteration t = s + 1; t <= k; ++t) {
    const Matrix& a = factors[static_cast<std::size_t>(t - 1)].matrix();
    if (a.rows() != m) throw std::invalid_argument("phi_product: dimension mismatch");
    product = a * product;
  }
  return product;
}

RateCertificate rate_certificate(std::size_t agents, double eta, int window) {
  if (agents < 1) throw std::invalid_argument("rate certificate needs m >= 1");
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("rate certificate needs 0 < eta < 1");
  if (window < 1) throw std::invalid_argument("rate certificate needs Q >= 1");
  const double m = static_cast<double>(agents);
  const double base = 1.0 - eta / (4.0 * m * m);
  return {std::pow(base, -2.0), std::pow(base, 1.0 / static_cast<double>(window))};
}

WeightSchedule WeightSchedule::metropolis(TopologySchedule topology) {
  WeightSchedule out(WeightRule::kMetropolis, std::move(topology));
  if (out.topology_.kind() != ScheduleKind::kRandom) {
    auto cache = std::make_shared<std::vector<MixingMatrix>>();
    for (std::size_t p = 0; p < out.topology_.period(); ++p)
      cache->push_back(out.build(out.topology_.edges(static_cast<Iteration>(p) + 1)));
    out.cached_ = std::move(cache);
  }
  return out;
}

WeightSchedule WeightSchedule::equal_neighbor(TopologySchedule topology) {
  WeightSchedule out(WeightRule::kEqualNeighbor, std::move(topology));
  if (out.topology_.kind() != ScheduleKind::kRandom) {
    auto cache = std::make_shared<std::vector<MixingMatrix>>();
    for (std::size_t p = 0; p < out.topology_.period(); ++p)
      cache->push_back(out.build(out.topology_.edges(static_cast<Iteration>(p) + 1)));
    out.cached_ = std::move(cache);
  }
  return out;
}

WeightSchedule WeightSchedule::explicit_list(std::vector<MixingMatrix> matrices,
                                             TopologySchedule topology) {
  if (matrices.empty()) throw std::invalid_argument("explicit weight schedule needs matrices");
  if (topology.kind() == ScheduleKind::kRandom)
    throw std::invalid_argument("explicit weights cannot follow a random topology");
  const std::size_t m = topology.agents();
  for (const MixingMatrix& a : matrices)
    if (a.agents() != m) throw std::invalid_argument("explicit weight matrix size mismatch");

  const std::size_t cycle = std::lcm(matrices.size(), topology.period());
  for (std::size_t t = 0; t < cycle; ++t) {
    const Iteration k = static_cast<Iteration>(t) + 1;
    const EdgeSet edges = topology.edges(k);
    if (auto violation = weight_violation(matrices[t % matrices.size()].matrix(), &edges)) {
      throw AssumptionViolation("explicit weights A(" + std::to_string(k) + "): " + *violation);
    }
  }
  WeightSchedule out(WeightRule::kExplicit, std::move(topology));
  out.cached_ = std::make_shared<const std::vector<MixingMatrix>>(std::move(matrices));
  return out;
}

WeightSchedule WeightSchedule::explicit_list(std::vector<MixingMatrix> matrices, int window,
                                             Validation validation) {
  if (matrices.empty()) throw std::invalid_argument("explicit weight schedule needs matrices");
  std::vector<EdgeSet> phases;
  for (const MixingMatrix& a : matrices) phases.push_back(a.support());
  auto topology = TopologySchedule::periodic(std::move(phases), window, validation);
  return explicit_list(std::move(matrices), std::move(topology));
}

MixingMatrix WeightSchedule::build(const EdgeSet& edges) const {
  switch (rule_) {
    case WeightRule::kMetropolis: return metropolis_weights(edges);
    case WeightRule::kEqualNeighbor: return equal_neighbor_weights(edges);
    case WeightRule::kExplicit: break;
  }
  throw std::logic_error("explicit schedules are fully cached");
}

MixingMatrix WeightSchedule::at(Iteration k) const {
  if (k < 1) throw std::invalid_argument("A(k) is defined for k >= 1");
  if (cached_) return (*cached_)[static_cast<std::size_t>((k - 1) % static_cast<Iteration>(cached_->size()))];
  return build(topology_.edges(k));
}

const MixingMatrix* WeightSchedule::cached_at(Iteration k) const {
  if (k < 1) throw std::invalid_argument("A(k) is defined for k >= 1");
  if (!cached_) return nullptr;
  return &(*cached_)[static_cast<std::size_t>((k - 1) % static_cast<Iteration>(cached_->size()))];
}

double WeightSchedule::eta(Iteration horizon) const {
  double eta = std::numeric_limits<double>::infinity();
  if (cached_) {
    for (const MixingMatrix& a : *cached_) eta = std::min(eta, a.min_positive());
  } else {
    for (Iteration k = 1; k <= std::max<Iteration>(horizon, 1); ++k) eta = std::min(eta, at(k).min_positive());
  }
  return eta >= 1.0 ? 0.5 : eta;
}

RateCertificate WeightSchedule::certificate(Iteration horizon) const {
  return rate_certificate(agents(), eta(horizon), topology_.window());
}

GeometricRateReport verify_geometric_rate(const WeightSchedule& schedule, Iteration start,
                                          Iteration horizon) {
  if (horizon <= start) throw std::invalid_argument("verify_geometric_rate needs horizon > start");
  if (start < 0) throw std::invalid_argument("verify_geometric_rate needs start >= 0");
  GeometricRateReport report;
  report.start = start;
  report.horizon = horizon;
  report.eta = schedule.eta(horizon);
  const RateCertificate cert = rate_certificate(schedule.agents(), report.eta, schedule.topology().window());
  report.theta = cert.theta;
  report.beta = cert.beta;

  const Index m = static_cast<Index>(schedule.agents());
  const double uniform = 1.0 / static_cast<double>(m);
  Matrix product = Matrix::Identity(m, m);
  Matrix scratch(m, m);
  double bound = cert.theta;
  for (Iteration k = start + 1; k <= horizon; ++k) {
    scratch.noalias() = schedule.at(k).matrix() * product;
    product.swap(scratch);
    bound *= cert.beta;
    const double deviation = (product.array() - uniform).abs().maxCoeff();
    report.deviations.push_back(deviation);
    report.worst_ratio = std::max(report.worst_ratio, deviation / bound);
    if (deviation > bound) report.violations.push_back(k);
  }
  return report;
}

void to_json(nlohmann::json& j, const GeometricRateReport& report) {
  j = nlohmann::json{{"theta", report.theta},           {"beta", report.beta},
                     {"eta", report.eta},               {"start", report.start},
                     {"horizon", report.horizon},       {"worst_ratio", report.worst_ratio},
                     {"violations", report.violations}, {"holds", report.holds()}};
}

}  // namespace netopt
