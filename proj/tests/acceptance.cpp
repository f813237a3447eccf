// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "netopt/bounds.hpp"
#include "netopt/engine.hpp"

using namespace netopt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

Vector scalar(double v) { return Vector::Constant(1, v); }

Matrix row(std::initializer_list<double> values) {
  Matrix out(1, static_cast<Index>(values.size()));
  Index i = 0;
  for (double v : values) out(0, i++) = v;
  return out;
}

// The 3-agent quadratic: f_i(x) = (x - c_i)^2, c = (-2, 0, 2), X = [-1, 1].
SimConfig quadratic(NoiseModel noise, StepsizeSchedule stepsize, Iteration horizon, EdgeSet edges) {
  Problem problem({Quadratic{scalar(-2)}, Quadratic{scalar(0)}, Quadratic{scalar(2)}},
                  ConvexSet::box(scalar(-1), scalar(1)), Optimum{8.0, scalar(0)});
  return SimConfig{std::move(problem),
                   WeightSchedule::metropolis(TopologySchedule::fixed(std::move(edges))),
                   std::move(noise),
                   stepsize,
                   horizon,
                   row({-1, 0, 1}),
                   2024};
}

NoiseModel gaussian(double sigma) { return NoiseModel(GaussianNoise{{sigma, sigma, sigma}}, 3, 1, 0); }

Outcome mixing_certificate() {
  Iteration violations = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    CounterRng rng(17, StreamTag::kSampling, s);
    const auto m = static_cast<std::size_t>(2 + rng() % 7);
    const int q = static_cast<int>(1 + rng() % 3);
    // A spanning path in random order plus random chords, links dealt
    // round-robin over Q phases so only the Q-window union is connected.
    std::vector<AgentId> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Edge> links;
    for (std::size_t i = 0; i + 1 < m; ++i) links.push_back({order[i], order[i + 1]});
    for (AgentId a = 0; a < m; ++a)
      for (AgentId b = a + 1; b < m; ++b)
        if (rng.uniform() < 0.3 && std::none_of(links.begin(), links.end(), [&](const Edge& e) {
              return (e.from == a && e.to == b) || (e.from == b && e.to == a);
            }))
          links.push_back({a, b});
    std::vector<std::vector<Edge>> split(static_cast<std::size_t>(q));
    for (std::size_t l = 0; l < links.size(); ++l) split[l % static_cast<std::size_t>(q)].push_back(links[l]);
    std::vector<EdgeSet> phases;
    for (const auto& part : split) phases.push_back(EdgeSet::undirected(m, part));
    const WeightSchedule weights = WeightSchedule::metropolis(TopologySchedule::periodic(phases, q));
    const GeometricRateReport report = verify_geometric_rate(weights, 0, 200);
    violations += static_cast<Iteration>(report.violations.size());
    worst = std::max(worst, report.worst_ratio);
  }
  return {violations == 0, fmt("violations %.0f, worst deviation/bound %.3g", double(violations), worst)};
}

Outcome exact_optimum() {
  const SimConfig cfg = quadratic(gaussian(0.1), StepsizeSchedule::harmonic(1.0, 10.0), 200'000, EdgeSet::complete(3));
  SimConfig sparse = cfg;
  sparse.record.stride = 10'000;
  double worst = 0.0, square = 0.0;
  MonteCarloOptions opts;
  opts.on_trace = [&](std::size_t, const RunTrace& t) {
    for (Index j = 0; j < 3; ++j) {
      worst = std::max(worst, std::abs(t.final_iterates(0, j)));
      square += t.final_iterates(0, j) * t.final_iterates(0, j);
    }
  };
  monte_carlo(sparse, 20, opts);
  const double msd = square / 60.0;
  return {worst < 5e-3 && msd < 1e-4, fmt("max |w_jK - x*| %.3g (< 5e-3), mean square %.3g (< 1e-4)", worst, msd)};
}

Outcome consensus_in_mean() {
  SimConfig cfg = quadratic(gaussian(0.1), StepsizeSchedule::harmonic(1.0, 10.0), 200'000, EdgeSet::complete(3));
  cfg.record.stride = 100;
  const AggregatedTrace agg = monte_carlo(cfg, 100);
  double worst = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    double sum = 0.0;
    for (std::size_t r = 0; r < agg.replicas; ++r) sum += agg.tail_disagreement[r * 3 + j];
    worst = std::max(worst, sum / static_cast<double>(agg.replicas));
  }
  return {worst < 1e-3, fmt("tail mean disagreement %.3g (< 1e-3)", worst)};
}

Outcome constant_stepsize_bound() {
  const SimConfig cfg = quadratic(gaussian(0.1), StepsizeSchedule::constant(0.02), 5000, EdgeSet::complete(3));
  const Simulator sim(cfg);
  std::optional<RunTrace> first;
  MonteCarloOptions opts;
  opts.on_trace = [&](std::size_t r, const RunTrace& t) {
    if (r == 0) first = t;
  };
  const AggregatedTrace agg = monte_carlo(cfg, 100, opts);
  // The initial iterates are deterministic, so replica 0 carries the realized A.
  const BoundInputs in = bound_inputs(sim, *first, scalar(0));
  BoundReport report = evaluate_bounds(in, 8.0, {100, 1000, 5000});
  bound_vs_empirical(report, agg);
  bool pass = true;
  std::string detail;
  for (Iteration t : {100, 1000, 5000}) {
    const BoundEntry& e = report.entry("finite_time_t" + std::to_string(t));
    pass = pass && e.pass.value_or(false);
    detail += fmt("t=%.0f: %.3g <= %.3g; ", double(t), *e.empirical, e.value);
  }
  return {pass, detail};
}

Outcome stopping_rule_consistency() {
  bool pass = true;
  std::string detail;
  for (double eps : {0.5, 0.1}) {
    // A depends on v_{i,1} and hence on α; iterate α to a fixed point.
    double alpha = 0.01;
    StoppingRule rule;
    for (int it = 0; it < 100; ++it) {
      const SimConfig probe = quadratic(NoiseModel(NoNoise{}, 3, 1), StepsizeSchedule::constant(alpha), 2, EdgeSet::path(3));
      const RunConstants k = constants_from_run(probe, run(probe), scalar(0));
      rule = stopping_rule(k.a, k.b, k.c, eps);
      const bool settled = std::abs(rule.alpha - alpha) <= 1e-12 * alpha;
      alpha = rule.alpha;
      if (settled) break;
    }
    SimConfig cfg = quadratic(NoiseModel(NoNoise{}, 3, 1), StepsizeSchedule::constant(alpha), rule.iterations,
                              EdgeSet::path(3));
    cfg.record.stride = rule.iterations;
    const RunTrace trace = run(cfg);
    const RunConstants k = constants_from_run(cfg, trace, scalar(0));
    const double n = static_cast<double>(rule.iterations);
    const double bound = k.a / (n * alpha) + k.b / n + alpha * k.c;
    double worst = 0.0;
    for (Index j = 0; j < 3; ++j)
      worst = std::max(worst, cfg.problem.value(trace.final_averages.col(j)) - 8.0);
    pass = pass && worst <= eps && bound <= eps + 1e-9;
    detail += fmt("eps=%.2g: N=%.0f, ", eps, n) + fmt("max f(z)-f* %.3g, bound %.3g; ", worst, bound);
  }
  return {pass, detail};
}

Outcome iterate_oracles() {
  SimConfig cfg = quadratic(gaussian(0.1), StepsizeSchedule::constant(0.02), 10'000, EdgeSet::path(3));
  cfg.checks.displacement = true;
  cfg.checks.iterate_relation_samples = 100;
  cfg.checks.iterate_relation_points = 5;
  cfg.checks.tolerance = 1e-9;
  cfg.checks.policy = CheckPolicy::kWarn;
  const CheckReport c = run(cfg).checks;
  const bool pass = c.displacement_violations == 0 && c.relation_violations == 0 && c.displacement_checked == 30'000 &&
                    c.relation_checked == 500;
  return {pass, fmt("displacement %.0f/%.0f, ", double(c.displacement_violations), double(c.displacement_checked)) +
                    fmt("relation %.0f/%.0f violations", double(c.relation_violations), double(c.relation_checked))};
}

// Running minimum over rows of the replica-mean excess f(w_j) - f*, worst agent,
// with the standard error at the minimizing row.
std::pair<double, double> running_min_excess(const AggregatedTrace& agg, double f_star) {
  double worst = -1.0, worst_se = 0.0;
  for (std::size_t j = 0; j < agg.agents; ++j) {
    double best = std::numeric_limits<double>::infinity(), se = 0.0;
    for (std::size_t r = 0; r < agg.rows(); ++r) {
      const double v = agg.iterate_value.mean[r * agg.agents + j] - f_star;
      if (v < best) {
        best = v;
        se = agg.iterate_value.se[r * agg.agents + j];
      }
    }
    if (best > worst) {
      worst = best;
      worst_se = se;
    }
  }
  return {worst, worst_se};
}

Outcome biased_errors() {
  auto biased = [](double b) {
    std::vector<Vector> bias(3, scalar(b));
    SimConfig cfg = quadratic(NoiseModel(BiasedNoise{BiasSchedule{bias, 0.0}, {0.1, 0.1, 0.1}}, 3, 1, 0),
                              StepsizeSchedule::harmonic(1.0, 10.0), 20'000, EdgeSet::complete(3));
    cfg.record.stride = 10;
    return running_min_excess(monte_carlo(cfg, 100), 8.0);
  };
  const double bound = 2.0 * 3 * 0.05;  // D Σ μ̄_i
  const auto [with_bias, se] = biased(0.05);
  const auto [without, se0] = biased(0.0);
  (void)se0;
  return {with_bias <= bound + 3.0 * se && without < 1e-2,
          fmt("b=0.05: %.3g <= %.3g + 3SE; ", with_bias, bound) + fmt("b=0: %.3g (< 1e-2)", without)};
}

Outcome m4_scaling() {
  auto term = [](std::size_t m) {
    const double eta = 0.05;
    const RateCertificate cert = rate_certificate(m, eta, 1);
    BoundInputs in;
    in.agents = m;
    in.theta = cert.theta;
    in.beta = cert.beta;
    in.eta = eta;
    in.c.assign(m, 1.0);
    in.nu.assign(m, 0.0);
    in.mu.assign(m, 0.0);
    in.alpha = 0.01;
    return function_value_alpha_term(in, in.alpha);
  };
  const double r1 = term(8) / term(4);
  const double r2 = term(16) / term(8);
  return {std::abs(r1 / 16 - 1) < 0.1 && std::abs(r2 / 16 - 1) < 0.1, fmt("ratios %.4g, %.4g (16 +- 10%%)", r1, r2)};
}

Outcome estimators() {
  const RobbinsMonro rm([](const Vector& x, double r) { return Vector::Constant(1, 2.0 * (x(0) - r)); },
                        [](CounterRng& rng) { return rng.uniform() < 0.5 ? -1.0 : 1.0; }, 31);
  const int n = 100'000;
  const Vector x = Vector::Zero(1);
  double sum = 0.0;
  for (int k = 1; k <= n; ++k) sum += rm.subgradient(x, k)(0);  // ε = ∇g - E∇g, E∇g(0) = 0
  const double mean = sum / n;
  const double limit = 3.0 * 2.0 / std::sqrt(double(n));  // σ = 2

  double worst = 0.0;
  for (double beta : {1e-1, 1e-2, 1e-3}) {
    const KieferWolfowitz kw([](double, double r) { return r; }, [](double y, CounterRng&) { return y * y; },
                             Spacing{beta, 0.0}, 5);
    const double bias = kw.subgradient(0.7, 1) - 1.4;
    worst = std::max(worst, std::abs(bias / beta - 1.0));
  }
  return {std::abs(mean) < limit && worst < 0.05,
          fmt("RM |mean| %.3g (< %.3g); KW worst relative bias error %.3g (< 0.05)", std::abs(mean), limit, worst)};
}

Outcome convolution_checks() {
  const std::vector<double> ones(200, 1.0);
  const double geometric = std::abs(convolution_limit_check(ones, 0.5).final_value - 2.0);
  const std::vector<double> zeros(200, 0.0);
  const double zero = convolution_limit_check(zeros, 0.5).final_value;
  std::vector<double> harmonic;
  for (int k = 1; k <= 1000; ++k) harmonic.push_back(1.0 / k);
  const double decay = convolution_limit_check(harmonic, 0.5).final_value;

  std::vector<double> cesaro, unit(10'000, 1.0), alternating, constant(100, 1.7), zetas;
  for (int k = 1; k <= 10'000; ++k) {
    cesaro.push_back(3.0 + 1.0 / k);
    alternating.push_back(k % 2 ? -1.0 : 1.0);
  }
  for (int k = 1; k <= 100; ++k) zetas.push_back(1.0 / std::sqrt(k));
  const double exact = std::abs(weighted_average_limit_check(constant, zetas).final_ratio - 1.7);
  const double mean = std::abs(weighted_average_limit_check(cesaro, unit).final_ratio - 3.0);
  const WeightedAverageReport alt = weighted_average_limit_check(alternating, unit);
  double bounded = 0.0;
  for (double r : alt.ratios) bounded = std::max(bounded, std::abs(r));

  const bool pass = geometric < 1e-10 && zero == 0.0 && decay < 0.01 && exact < 1e-12 && mean < 0.01 &&
                    bounded <= 1.0 && alt.holds(0.0);
  return {pass, fmt("|s_200-2| %.2g, s_1000 %.3g, |R-3| %.3g", geometric, decay, mean)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> body;
    double budget;  // seconds, 0 when none is stated
  };
  const std::vector<Criterion> criteria = {
      {1, "mixing certificate", mixing_certificate, 5},
      {2, "exact optimum, diminishing stepsize", exact_optimum, 60},
      {3, "consensus in mean", consensus_in_mean, 0},
      {4, "constant-stepsize finite-time bound", constant_stepsize_bound, 120},
      {5, "stopping rule self-consistency", stopping_rule_consistency, 0},
      {6, "per-realization iterate oracles", iterate_oracles, 0},
      {7, "biased-error term", biased_errors, 0},
      {8, "m^4 scaling of the alpha term", m4_scaling, 0},
      {9, "stochastic approximation estimators", estimators, 0},
      {10, "convolution and weighted-average checks", convolution_checks, 0},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.body();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = outcome.pass;
    std::string timing = fmt("%.2fs", seconds);
    if (c.budget > 0) {
      timing += fmt(" of %.0fs", c.budget);
      pass = pass && seconds < c.budget;
    }
    if (!pass) ++failures;
    std::printf("%s %2d %s: %s [%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, outcome.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
