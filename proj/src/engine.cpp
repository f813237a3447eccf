#include "netopt/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace netopt {

namespace {

constexpr std::size_t kMaxMessages = 10;

// Buffers reused across iterations of one realization.
struct Workspace {
  Workspace(Index n, Index m) : v(n, m), next(n, m), errors(n, m), grad(n), error_norm(m), step_norm(m) {}
  Matrix v;
  Matrix next;
  Matrix errors;
  Vector grad;
  std::vector<double> error_norm;
  std::vector<double> step_norm;
};

// Mixing, noise draw, subgradient step and projection for iteration k -> k + 1.
// Leaves v_k in ws.v and w_{k+1} in ws.next.
double advance(const SimConfig& config, const SimState& state, const MixingMatrix& a, Workspace& ws) {
  const Problem& problem = config.problem;
  const Index m = state.w.cols();
  const Iteration k = state.k;
  ws.v.noalias() = state.w * a.matrix().transpose();
  const double alpha = config.stepsize.at(k + 1);
  for (Index i = 0; i < m; ++i) {
    const auto agent = static_cast<AgentId>(i);
    config.noise.sample_into(state.seed, agent, k + 1, ws.errors.col(i));
    problem.component(agent).subgradient_into(ws.v.col(i), ws.grad);
    ws.next.col(i) = ws.v.col(i) - alpha * (ws.grad + ws.errors.col(i));
    problem.set().project_in_place(ws.next.col(i));
    if (!ws.next.col(i).allFinite()) {
      throw NumericError("non-finite iterate for agent " + std::to_string(i) + " at k = " +
                         std::to_string(k + 1));
    }
    ws.error_norm[static_cast<std::size_t>(i)] = ws.errors.col(i).norm();
    ws.step_norm[static_cast<std::size_t>(i)] = (ws.next.col(i) - ws.v.col(i)).norm();
  }
  return alpha;
}

void report_violation(CheckReport& report, const CheckOptions& options, std::string message) {
  if (options.policy == CheckPolicy::kAbort) throw CheckFailure(message);
  if (report.messages.size() < kMaxMessages) report.messages.push_back(std::move(message));
}

// Right-hand side of the iterate relation, kept until v_{k+1} is known.
struct PendingRelation {
  Iteration k = -1;
  std::vector<Vector> points;
  std::vector<double> rhs;
};

// Iterations sampled for the iterate relation, ascending.
std::vector<Iteration> relation_iterations(Iteration horizon, int samples, std::uint64_t seed) {
  std::vector<Iteration> all(static_cast<std::size_t>(horizon));
  std::iota(all.begin(), all.end(), Iteration{0});
  if (samples <= 0) return {};
  if (static_cast<Iteration>(samples) >= horizon) return all;
  std::vector<Iteration> out;
  CounterRng rng(seed, StreamTag::kChecks, 0);
  std::sample(all.begin(), all.end(), std::back_inserter(out), static_cast<std::size_t>(samples), rng);
  return out;
}

}  // namespace

void CheckReport::merge(const CheckReport& other) {
  feasibility_violations += other.feasibility_violations;
  displacement_checked += other.displacement_checked;
  displacement_violations += other.displacement_violations;
  disagreement_checked += other.disagreement_checked;
  disagreement_violations += other.disagreement_violations;
  relation_checked += other.relation_checked;
  relation_violations += other.relation_violations;
  disagreement_worst_ratio = std::max(disagreement_worst_ratio, other.disagreement_worst_ratio);
  for (const std::string& msg : other.messages) {
    if (messages.size() >= kMaxMessages) break;
    messages.push_back(msg);
  }
}

Matrix mix(const Matrix& iterates, const MixingMatrix& weights) {
  if (iterates.cols() != static_cast<Index>(weights.agents()))
    throw std::invalid_argument("mix: iterate columns do not match the agent count");
  return iterates * weights.matrix().transpose();
}

std::vector<double> disagreement(const SimState& state) {
  std::vector<double> out(static_cast<std::size_t>(state.w.cols()));
  for (Index j = 0; j < state.w.cols(); ++j) out[static_cast<std::size_t>(j)] = (state.y - state.w.col(j)).norm();
  return out;
}

double RunTrace::metric(Metric metric, std::size_t row, AgentId j) const {
  if (row >= rows() || j >= agents_) throw std::out_of_range("RunTrace::metric index");
  const std::size_t at = row * agents_ + j;
  switch (metric) {
    case Metric::kDisagreement: return disagreement_[at];
    case Metric::kIterateValue: return f_w_[at];
    case Metric::kAverageValue: return f_z_[at];
    case Metric::kStepNorm: return step_norm_[at];
  }
  throw std::logic_error("unknown metric");
}

Vector RunTrace::iterate(std::size_t row, AgentId j) const {
  if (!has_iterates()) throw std::logic_error("iterates were not recorded");
  if (row >= rows() || j >= agents_) throw std::out_of_range("RunTrace::iterate index");
  const std::size_t offset = (row * agents_ + j) * static_cast<std::size_t>(dimension_);
  return Eigen::Map<const Vector>(iterates_.data() + offset, dimension_);
}

Simulator::Simulator(SimConfig config) : config_(std::move(config)), eta_(0.5), certificate_{1.0, 0.5} {
  const std::size_t m = config_.problem.agents();
  const Index n = config_.problem.dimension();
  if (config_.weights.agents() != m)
    throw std::invalid_argument("weight schedule has " + std::to_string(config_.weights.agents()) +
                                " agents, problem has " + std::to_string(m));
  if (config_.noise.agents() != m || config_.noise.dimension() != n)
    throw std::invalid_argument("noise model does not match the problem size");
  if (config_.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (config_.record.stride < 1) throw std::invalid_argument("record stride must be >= 1");
  if (const auto* w0 = std::get_if<Matrix>(&config_.initial)) {
    if (w0->rows() != n || w0->cols() != static_cast<Index>(m))
      throw std::invalid_argument("initial iterates must be n x m");
    for (Index i = 0; i < w0->cols(); ++i)
      if (!config_.problem.set().contains(w0->col(i), 1e-12))
        throw AssumptionViolation("initial iterate of agent " + std::to_string(i) + " is outside X");
  } else if (!config_.problem.set().bounded()) {
    throw std::invalid_argument("uniform initial iterates need a bounded constraint set");
  }

  if (config_.subgradient_bounds) {
    if (config_.subgradient_bounds->size() != m)
      throw std::invalid_argument("subgradient bounds need one value per agent");
    bounds_ = config_.subgradient_bounds;
  } else {
    try {
      std::vector<double> c;
      for (std::size_t i = 0; i < m; ++i) c.push_back(subgradient_bound(config_.problem.component(i), config_.problem.set()).value);
      bounds_ = std::move(c);
    } catch (const std::domain_error&) {
      bounds_ = std::nullopt;
    }
  }
  const CheckOptions& checks = config_.checks;
  const bool need_bounds = checks.displacement || checks.disagreement_bound || checks.iterate_relation_samples > 0;
  if (need_bounds && !bounds_)
    throw std::invalid_argument("bound checks need a uniform subgradient bound on X");
  if (checks.iterate_relation_samples > 0 && !config_.problem.set().bounded())
    throw std::invalid_argument("the iterate relation check samples z from X and needs it bounded");

  eta_ = config_.weights.eta(config_.horizon + 2);
  certificate_ = rate_certificate(m, eta_, config_.weights.topology().window());
}

std::uint64_t Simulator::replica_seed(std::uint64_t replica) const {
  return derive_seed(config_.seed, StreamTag::kReplica, replica);
}

SimState Simulator::initial_state(std::uint64_t seed) const {
  const std::size_t m = agents();
  const Index n = config_.problem.dimension();
  SimState state;
  state.seed = seed;
  if (const auto* w0 = std::get_if<Matrix>(&config_.initial)) {
    state.w = *w0;
  } else {
    state.w.resize(n, static_cast<Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      CounterRng rng(seed, StreamTag::kInitial, i);
      state.w.col(static_cast<Index>(i)) = config_.problem.set().sample(rng);
    }
  }
  state.y = state.w.rowwise().mean();
  return state;
}

StepRecord Simulator::step(SimState& state) const {
  if (state.w.cols() != static_cast<Index>(agents()) || state.w.rows() != config_.problem.dimension())
    throw std::invalid_argument("state does not match the configured problem");
  Workspace ws(state.w.rows(), state.w.cols());
  const MixingMatrix* cached = config_.weights.cached_at(state.k + 1);
  std::optional<MixingMatrix> built;
  if (!cached) built = config_.weights.at(state.k + 1);
  StepRecord record;
  record.alpha = advance(config_, state, cached ? *cached : *built, ws);
  record.errors = ws.errors;
  record.displacement = ws.step_norm;
  state.v = ws.v;
  state.w.swap(ws.next);
  state.k += 1;
  state.y = state.w.rowwise().mean();
  return record;
}

RunTrace Simulator::run_seeded(std::uint64_t seed) const {
  const SimConfig& cfg = config_;
  const Problem& problem = cfg.problem;
  const ConvexSet& set = problem.set();
  const CheckOptions& opts = cfg.checks;
  const std::size_t m = agents();
  const Index mi = static_cast<Index>(m);
  const Index n = problem.dimension();
  const Iteration horizon = cfg.horizon;
  const double md = static_cast<double>(m);

  RunTrace trace(m, n);
  trace.seed = seed;
  CheckReport& report = trace.checks;
  SimState state = initial_state(seed);
  trace.initial = state.w;
  Workspace ws(n, mi);

  const Iteration stride = cfg.record.stride;
  const std::size_t rows = static_cast<std::size_t>(horizon / stride + (stride > 1 ? 1 : 0) + (horizon % stride != 0 ? 1 : 0));
  trace.k_.reserve(rows);
  trace.alpha_.reserve(rows);
  trace.f_y_.reserve(rows);
  trace.disagreement_.reserve(rows * m);
  trace.f_w_.reserve(rows * m);
  trace.f_z_.reserve(rows * m);
  trace.step_norm_.reserve(rows * m);
  if (cfg.record.iterates) trace.iterates_.reserve(rows * m * static_cast<std::size_t>(n));

  const std::vector<double> c = bounds_.value_or(std::vector<double>(m, 0.0));
  const double max_c = *std::max_element(c.begin(), c.end());
  const double theta = certificate_.theta;
  const double beta = certificate_.beta;
  double max_w0 = 0.0;
  for (Index i = 0; i < mi; ++i) max_w0 = std::max(max_w0, state.w.col(i).norm());

  // Per-realization disagreement estimate: T_k = β (T_{k-1} + α_k G_k).
  double conv = 0.0;
  double beta_pow = 1.0;

  const std::vector<Iteration> sampled = relation_iterations(horizon, opts.iterate_relation_samples, seed);
  std::size_t next_sample = 0;
  PendingRelation pending;

  auto relation_lhs = [&](const Matrix& v_next) {
    for (std::size_t p = 0; p < pending.points.size(); ++p) {
      double lhs = 0.0;
      for (Index i = 0; i < mi; ++i) lhs += (v_next.col(i) - pending.points[p]).squaredNorm();
      const double rhs = pending.rhs[p];
      ++report.relation_checked;
      if (lhs > rhs + opts.tolerance * std::max(1.0, std::abs(rhs))) {
        ++report.relation_violations;
        report_violation(report, opts,
                         "iterate relation at k = " + std::to_string(pending.k) + ": " +
                             std::to_string(lhs) + " > " + std::to_string(rhs));
      }
    }
    pending.k = -1;
  };

  auto mixing_at = [&](Iteration k, std::optional<MixingMatrix>& slot) -> const MixingMatrix& {
    if (const MixingMatrix* cached = cfg.weights.cached_at(k)) return *cached;
    slot = cfg.weights.at(k);
    return *slot;
  };

  // f(y_k) and Σ_j ||y_k - w_{j,k}|| at the current state.
  double f_y = problem.value(state.y);
  double disagreement_sum = 0.0;
  for (Index j = 0; j < mi; ++j) disagreement_sum += (state.y - state.w.col(j)).norm();

  Matrix z = Matrix::Zero(n, mi);
  double weight_sum = 0.0;
  std::vector<double> dis(m);
  std::optional<MixingMatrix> slot;

  for (Iteration k = 0; k < horizon; ++k) {
    const MixingMatrix& a = mixing_at(k + 1, slot);
    const double alpha = advance(cfg, state, a, ws);
    if (pending.k == k - 1 && pending.k >= 0) relation_lhs(ws.v);
    if (k == 1) trace.first_average = ws.v;

    if (next_sample < sampled.size() && sampled[next_sample] == k) {
      ++next_sample;
      pending.k = k;
      pending.points.clear();
      pending.rhs.clear();
      double noise_sq = 0.0;
      for (std::size_t i = 0; i < m; ++i) noise_sq += (c[i] + ws.error_norm[i]) * (c[i] + ws.error_norm[i]);
      for (int p = 0; p < opts.iterate_relation_points; ++p) {
        CounterRng rng(seed, StreamTag::kChecks, static_cast<std::uint64_t>(k) + 1, static_cast<std::uint64_t>(p));
        Vector zp = set.sample(rng);
        double rhs = 0.0;
        double cross = 0.0;
        for (Index i = 0; i < mi; ++i) {
          rhs += (ws.v.col(i) - zp).squaredNorm();
          cross += ws.errors.col(i).dot(ws.v.col(i) - zp);
        }
        rhs += -2.0 * alpha * (f_y - problem.value(zp)) + 2.0 * alpha * max_c * disagreement_sum -
               2.0 * alpha * cross + alpha * alpha * noise_sq;
        pending.points.push_back(std::move(zp));
        pending.rhs.push_back(rhs);
      }
    }

    if (opts.displacement) {
      for (std::size_t i = 0; i < m; ++i) {
        const double bound = alpha * (c[i] + ws.error_norm[i]);
        ++report.displacement_checked;
        if (ws.step_norm[i] > bound + opts.tolerance * std::max(1.0, bound)) {
          ++report.displacement_violations;
          report_violation(report, opts,
                           "displacement of agent " + std::to_string(i) + " at k = " + std::to_string(k + 1) +
                               ": " + std::to_string(ws.step_norm[i]) + " > " + std::to_string(bound));
        }
      }
    }

    state.w.swap(ws.next);
    state.k = k + 1;
    state.y.noalias() = state.w.rowwise().mean();

    if (opts.feasibility) {
      for (Index i = 0; i < mi; ++i) {
        if (!set.contains(state.w.col(i), 1e-9)) {
          ++report.feasibility_violations;
          report_violation(report, opts,
                           "agent " + std::to_string(i) + " left X at k = " + std::to_string(k + 1));
        }
      }
    }

    disagreement_sum = 0.0;
    for (Index j = 0; j < mi; ++j) {
      dis[static_cast<std::size_t>(j)] = (state.y - state.w.col(j)).norm();
      disagreement_sum += dis[static_cast<std::size_t>(j)];
    }
    f_y = problem.value(state.y);

    if (opts.disagreement_bound) {
      double g = 0.0;
      for (std::size_t i = 0; i < m; ++i) g += c[i] + ws.error_norm[i];
      beta_pow *= beta;
      const double common = md * theta * beta_pow * max_w0 + theta * conv + alpha * g / md;
      for (std::size_t j = 0; j < m; ++j) {
        const double bound = common + alpha * (c[j] + ws.error_norm[j]);
        ++report.disagreement_checked;
        if (bound > 0.0) report.disagreement_worst_ratio = std::max(report.disagreement_worst_ratio, dis[j] / bound);
        if (dis[j] > bound + opts.tolerance * std::max(1.0, bound)) {
          ++report.disagreement_violations;
          report_violation(report, opts,
                           "disagreement of agent " + std::to_string(j) + " at k = " + std::to_string(k + 1) +
                               ": " + std::to_string(dis[j]) + " > " + std::to_string(bound));
        }
      }
      conv = beta * (conv + alpha * g);
    }

    // z_{j,t} = Σ_{s<=t} α_{s+1} w_{j,s} / Σ α_{s+1}; unit weights when α vanishes.
    const double next_alpha = cfg.stepsize.at(k + 2);
    const double omega = next_alpha > 0.0 ? next_alpha : 1.0;
    weight_sum += omega;
    z += (omega / weight_sum) * (state.w - z);

    const Iteration t = k + 1;
    if (t == 1 || t % stride == 0 || t == horizon) {
      trace.k_.push_back(t);
      trace.alpha_.push_back(alpha);
      trace.f_y_.push_back(f_y);
      for (Index j = 0; j < mi; ++j) {
        trace.disagreement_.push_back(dis[static_cast<std::size_t>(j)]);
        trace.f_w_.push_back(problem.value(state.w.col(j)));
        trace.f_z_.push_back(problem.value(z.col(j)));
        trace.step_norm_.push_back(ws.step_norm[static_cast<std::size_t>(j)]);
        if (cfg.record.iterates)
          trace.iterates_.insert(trace.iterates_.end(), state.w.col(j).data(), state.w.col(j).data() + n);
      }
    }
  }

  if (pending.k == horizon - 1 || horizon == 1) {
    std::optional<MixingMatrix> tail_slot;
    const Matrix v_last = state.w * mixing_at(horizon + 1, tail_slot).matrix().transpose();
    if (pending.k == horizon - 1) relation_lhs(v_last);
    if (horizon == 1) trace.first_average = v_last;
  }

  state.v = ws.v;
  trace.final_iterates = state.w;
  trace.final_averages = z;
  trace.final_network_average = state.y;
  return trace;
}

RunTrace run(const SimConfig& config) { return Simulator(config).run(); }

std::size_t AggregatedTrace::tail_start() const noexcept {
  const std::size_t r = rows();
  if (r == 0) return 0;
  const auto tail = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(r)));
  return r - std::clamp<std::size_t>(tail, 1, r);
}

const MetricStats& AggregatedTrace::stats(Metric metric) const {
  switch (metric) {
    case Metric::kDisagreement: return disagreement;
    case Metric::kIterateValue: return iterate_value;
    case Metric::kAverageValue: return average_value;
    case Metric::kStepNorm: return step_norm;
  }
  throw std::logic_error("unknown metric");
}

// Welford accumulator over replicas for a fixed-size series.
class TraceAccumulator::Series {
 public:
  explicit Series(std::size_t size) : mean_(size, 0.0), m2_(size, 0.0) {}

  void add(std::size_t index, double value, std::size_t count) {
    const double delta = value - mean_[index];
    mean_[index] += delta / static_cast<double>(count);
    m2_[index] += delta * (value - mean_[index]);
  }

  MetricStats finish(std::size_t count) const {
    MetricStats out{mean_, std::vector<double>(mean_.size(), 0.0)};
    if (count > 1) {
      const double r = static_cast<double>(count);
      for (std::size_t i = 0; i < m2_.size(); ++i) out.se[i] = std::sqrt(m2_[i] / (r - 1.0)) / std::sqrt(r);
    }
    return out;
  }

 private:
  std::vector<double> mean_;
  std::vector<double> m2_;
};

TraceAccumulator::TraceAccumulator(std::size_t agents, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw std::invalid_argument("tail fraction must lie in (0, 1]");
  out_.agents = agents;
  out_.tail_fraction = tail_fraction;
}

TraceAccumulator::~TraceAccumulator() = default;
TraceAccumulator::TraceAccumulator(TraceAccumulator&&) noexcept = default;
TraceAccumulator& TraceAccumulator::operator=(TraceAccumulator&&) noexcept = default;

void TraceAccumulator::add(const RunTrace& trace) {
  const std::size_t m = out_.agents;
  if (trace.agents() != m) throw std::invalid_argument("trace agent count differs");
  const std::size_t rows = trace.rows();
  if (rows == 0) throw std::invalid_argument("cannot aggregate an empty trace");
  if (out_.replicas == 0) {
    out_.k = trace.k_;
    out_.alpha = trace.alpha_;
    series_.emplace_back(rows);
    for (int s = 0; s < 4; ++s) series_.emplace_back(rows * m);
  } else if (trace.k_ != out_.k) {
    throw std::invalid_argument("traces record different iterations");
  }
  const std::size_t seen = ++out_.replicas;
  for (std::size_t r = 0; r < rows; ++r) series_[0].add(r, trace.f_y_[r], seen);
  for (std::size_t i = 0; i < rows * m; ++i) {
    series_[1].add(i, trace.disagreement_[i], seen);
    series_[2].add(i, trace.f_w_[i], seen);
    series_[3].add(i, trace.f_z_[i], seen);
    series_[4].add(i, trace.step_norm_[i], seen);
  }
  const std::size_t start = out_.tail_start();
  const double len = static_cast<double>(rows - start);
  for (std::size_t j = 0; j < m; ++j) {
    double d = 0.0;
    double v = 0.0;
    for (std::size_t r = start; r < rows; ++r) {
      d += trace.disagreement_[r * m + j];
      v += trace.f_z_[r * m + j];
    }
    out_.tail_disagreement.push_back(d / len);
    out_.tail_average_value.push_back(v / len);
  }
  out_.checks.merge(trace.checks);
  out_.seeds.push_back(trace.seed);
}

AggregatedTrace TraceAccumulator::finish() const {
  if (out_.replicas == 0) throw std::logic_error("no traces were added");
  AggregatedTrace out = out_;
  out.network_value = series_[0].finish(out.replicas);
  out.disagreement = series_[1].finish(out.replicas);
  out.iterate_value = series_[2].finish(out.replicas);
  out.average_value = series_[3].finish(out.replicas);
  out.step_norm = series_[4].finish(out.replicas);
  return out;
}

AggregatedTrace monte_carlo(const SimConfig& config, int replicas, const MonteCarloOptions& options) {
  if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
  const Simulator sim(config);
  const auto count = static_cast<std::size_t>(replicas);
  const std::size_t threads = static_cast<std::size_t>(std::clamp(options.threads, 1, replicas));
  TraceAccumulator accumulator(sim.agents(), options.tail_fraction);

  for (std::size_t first = 0; first < count; first += threads) {
    const std::size_t batch = std::min(threads, count - first);
    std::vector<std::optional<RunTrace>> results(batch);
    if (batch == 1) {
      results[0] = sim.run_seeded(sim.replica_seed(first));
    } else {
      std::vector<std::exception_ptr> errors(batch);
      std::vector<std::thread> workers;
      for (std::size_t b = 0; b < batch; ++b) {
        workers.emplace_back([&, b] {
          try {
            results[b] = sim.run_seeded(sim.replica_seed(first + b));
          } catch (...) {
            errors[b] = std::current_exception();
          }
        });
      }
      for (std::thread& worker : workers) worker.join();
      for (const std::exception_ptr& error : errors)
        if (error) std::rethrow_exception(error);
    }
    // Replica order, so the result does not depend on the thread count.
    for (std::size_t b = 0; b < batch; ++b) {
      if (options.on_trace) options.on_trace(first + b, *results[b]);
      accumulator.add(*results[b]);
    }
  }
  return accumulator.finish();
}

}  // namespace netopt
