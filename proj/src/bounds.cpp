#include "netopt/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace netopt {

namespace {

double max_of(const std::vector<double>& values) {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

const char* kind_name(BoundKind kind) {
  switch (kind) {
    case BoundKind::kLimsup: return "limsup";
    case BoundKind::kLiminf: return "liminf";
    case BoundKind::kFiniteTime: return "finite_time";
  }
  return "unknown";
}

// Largest norm over X, from the corners of its bounding box.
double max_norm_over(const ConvexSet& set) {
  const auto [lower, upper] = set.bounding_box();
  Vector corner(lower.size());
  for (Index d = 0; d < lower.size(); ++d) corner(d) = std::max(std::abs(lower(d)), std::abs(upper(d)));
  return corner.norm();
}

// Mean and standard error over replicas of column j of a replicas x agents table.
std::pair<double, double> replica_stats(const std::vector<double>& table, std::size_t replicas, std::size_t agents,
                                        std::size_t j, double shift) {
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t r = 0; r < replicas; ++r) {
    const double x = table[r * agents + j] - shift;
    const double delta = x - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (x - mean);
  }
  const double se =
      replicas > 1 ? std::sqrt(m2 / static_cast<double>(replicas - 1)) / std::sqrt(static_cast<double>(replicas)) : 0.0;
  return {mean, se};
}

void set_verdict(BoundEntry& entry, double empirical, double se, double slack) {
  entry.empirical = empirical;
  entry.standard_error = se;
  const double bound = entry.evaluated.value_or(entry.value);
  entry.margin = bound - empirical + slack * se;
  entry.pass = *entry.margin >= 0.0;
}

}  // namespace

void BoundInputs::validate() const {
  if (agents < 1) throw std::invalid_argument("bounds need m >= 1");
  if (c.size() != agents || nu.size() != agents || mu.size() != agents)
    throw std::invalid_argument("bounds need C_i, nu_i and mu_i for every agent");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("bounds need beta in (0, 1)");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw std::invalid_argument("bounds need theta > 0");
  if (!(alpha >= 0.0)) throw std::invalid_argument("bounds need alpha >= 0");
  for (const auto* values : {&c, &nu, &mu})
    for (double v : *values)
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("bound inputs must be finite and >= 0");
  if (!(diameter >= 0.0) || !(initial_distance_sq >= 0.0) || !(max_initial_norm >= 0.0))
    throw std::invalid_argument("bound inputs must be nonnegative");
}

double BoundInputs::max_c() const { return max_of(c); }

double BoundInputs::max_c_nu() const {
  double best = 0.0;
  for (std::size_t i = 0; i < c.size() && i < nu.size(); ++i) best = std::max(best, c[i] + nu[i]);
  return best;
}

double BoundInputs::mu_sum() const { return std::accumulate(mu.begin(), mu.end(), 0.0); }

double BoundInputs::network_factor() const { return static_cast<double>(agents) * theta * beta / (1.0 - beta); }

double disagreement_bound(const BoundInputs& in) {
  in.validate();
  return in.alpha * in.max_c_nu() * (2.0 + in.network_factor());
}

double function_value_alpha_term(const BoundInputs& in, double alpha) {
  in.validate();
  if (!(alpha >= 0.0)) throw std::invalid_argument("stepsize must be >= 0");
  const double g = in.max_c_nu();
  return static_cast<double>(in.agents) * alpha * g * g * (4.5 + 2.0 * in.network_factor());
}

double function_value_bound(const BoundInputs& in) {
  in.validate();
  const double mu = in.mu_sum();
  double bias_term = 0.0;
  if (mu > 0.0) {
    if (!std::isfinite(in.diameter))
      throw std::domain_error(
          "the biased-error term needs a bounded constraint set: it is diam(X) times the sum of the mean error "
          "bounds, and X is unbounded");
    bias_term = in.diameter * mu;
  }
  return bias_term + function_value_alpha_term(in, in.alpha);
}

double averaged_bound(const BoundInputs& in) { return function_value_bound(in); }

double finite_time_bound(const BoundInputs& in, Iteration t, double alpha) {
  in.validate();
  if (t < 1) throw std::invalid_argument("finite-time bound needs t >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("finite-time bound needs alpha > 0");
  const RunConstants k = run_constants(in);
  const double td = static_cast<double>(t);
  return k.a / (td * alpha) + k.b / td + alpha * k.c;
}

StoppingRule stopping_rule(double a, double b, double c, double eps) {
  if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("stopping rule needs A > 0");
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("stopping rule needs C > 0");
  if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument("stopping rule needs B >= 0");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("stopping rule needs eps > 0");
  StoppingRule rule{a, b, c, eps, 0.0, 0.0, 0};
  // Positive root of B x^2 + 2 sqrt(AC) x - eps = 0, written to avoid cancellation.
  const double root_ac = std::sqrt(a * c);
  rule.psi = eps / (root_ac + std::sqrt(a * c + b * eps));
  rule.alpha = std::sqrt(a) * rule.psi / std::sqrt(c);
  rule.iterations = static_cast<Iteration>(std::ceil(1.0 / (rule.psi * rule.psi)));
  const double td = static_cast<double>(rule.iterations);
  const double achieved = a / (td * rule.alpha) + b / td + rule.alpha * c;
  if (achieved > eps + 1e-9)
    throw NumericError("stopping rule does not reach eps: bound " + std::to_string(achieved));
  return rule;
}

RunConstants run_constants(const BoundInputs& in) {
  const double m = static_cast<double>(in.agents);
  const double g = in.max_c_nu();
  RunConstants out;
  out.a = 0.5 * in.initial_distance_sq;
  out.b = 2.0 * m * m * in.theta * in.beta * in.beta / (1.0 - in.beta) * in.max_c() * in.max_initial_norm;
  out.c = m * g * g * (4.5 + 2.0 * in.network_factor());
  return out;
}

BoundInputs bound_inputs(const Simulator& sim) {
  const SimConfig& config = sim.config();
  const auto& c = sim.subgradient_bounds();
  if (!c) throw std::domain_error("bounds need a uniform subgradient bound C_i over X");
  const std::size_t m = sim.agents();
  BoundInputs in;
  in.agents = m;
  in.theta = sim.certificate().theta;
  in.beta = sim.certificate().beta;
  in.eta = sim.eta();
  in.window = config.weights.topology().window();
  in.c = *c;
  for (std::size_t i = 0; i < m; ++i) {
    in.nu.push_back(config.noise.rms_bound(i));
    in.mu.push_back(config.noise.mean_bound(i));
  }
  in.alpha = config.stepsize.limit();
  const ConvexSet& set = config.problem.set();
  in.diameter = set.diameter();
  // Without a realization: v_{i,1} and x* lie in X, so each distance is at most D.
  if (std::isfinite(in.diameter)) in.initial_distance_sq = static_cast<double>(m) * in.diameter * in.diameter;
  if (const auto* w0 = std::get_if<Matrix>(&config.initial)) {
    in.max_initial_norm = w0->colwise().norm().maxCoeff();
  } else {
    in.max_initial_norm = max_norm_over(set);
  }
  return in;
}

BoundInputs bound_inputs(const Simulator& sim, const RunTrace& trace, const Vector& x_star) {
  BoundInputs in = bound_inputs(sim);
  if (trace.first_average.size() == 0) throw std::invalid_argument("trace does not contain v_{i,1}");
  if (x_star.size() != trace.first_average.rows()) throw std::invalid_argument("x* has the wrong dimension");
  in.initial_distance_sq = (trace.first_average.colwise() - x_star).colwise().squaredNorm().sum();
  in.max_initial_norm = trace.initial.colwise().norm().maxCoeff();
  return in;
}

RunConstants constants_from_run(const SimConfig& config, const RunTrace& trace, const Vector& x_star) {
  const Simulator sim(config);
  return run_constants(bound_inputs(sim, trace, x_star));
}

const BoundEntry& BoundReport::entry(const std::string& name) const {
  for (const BoundEntry& e : entries)
    if (e.name == name) return e;
  throw std::out_of_range("no bound named " + name);
}

BoundEntry& BoundReport::entry(const std::string& name) {
  return const_cast<BoundEntry&>(static_cast<const BoundReport&>(*this).entry(name));
}

bool BoundReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const BoundEntry& e) { return e.pass.value_or(true); });
}

BoundReport evaluate_bounds(const BoundInputs& in, std::optional<double> f_star, const std::vector<Iteration>& times) {
  in.validate();
  BoundReport report;
  report.inputs = in;
  report.f_star = f_star;
  report.constants = run_constants(in);

  report.entries.push_back({"disagreement", BoundKind::kLimsup, disagreement_bound(in), 0, {}, {}, {}, {}, {},
                            "limsup_k E||y_k - w_{j,k}||"});
  const double fv = function_value_bound(in);
  std::string note = "excess over f*";
  if (in.mu_sum() == 0.0 && !std::isfinite(in.diameter)) note += "; diameter unused since all mean errors vanish";
  report.entries.push_back({"function_value", BoundKind::kLiminf, fv, 0, {}, {}, {}, {}, {},
                            "liminf_k E f(w_{j,k}), " + note});
  report.entries.push_back({"averaged", BoundKind::kLimsup, averaged_bound(in), 0, {}, {}, {}, {}, {},
                            "limsup_t E f(z_{j,t}), " + note});

  if (!times.empty()) {
    if (in.alpha > 0.0 && in.mu_sum() == 0.0) {
      for (Iteration t : times) {
        report.entries.push_back({"finite_time_t" + std::to_string(t), BoundKind::kFiniteTime,
                                  finite_time_bound(in, t, in.alpha), t, {}, {}, {}, {}, {},
                                  "E f(z_{j,t}) at constant stepsize, excess over f*"});
      }
    } else {
      report.flags.push_back("finite-time bound needs a positive constant stepsize and zero-mean errors");
    }
  }
  return report;
}

void bound_vs_empirical(BoundReport& report, const AggregatedTrace& trace, const EmpiricalOptions& options) {
  const std::size_t m = trace.agents;
  const std::size_t rows = trace.rows();
  const std::size_t replicas = trace.replicas;
  if (rows == 0 || m == 0) throw std::invalid_argument("aggregated trace is empty");
  if (m != report.inputs.agents) throw std::invalid_argument("trace and report disagree on the agent count");
  if (replicas < options.min_replicas)
    report.flags.push_back("insufficient replicas: " + std::to_string(replicas) + " < " +
                           std::to_string(options.min_replicas));

  const std::size_t tail = trace.tail_start();
  const double tail_alpha = trace.alpha[tail];
  const bool surrogate = options.finite_horizon_alpha && tail_alpha > report.inputs.alpha;
  const double slack = options.slack_se;

  for (BoundEntry& entry : report.entries) {
    if (entry.name == "disagreement") {
      if (surrogate) {
        BoundInputs at_tail = report.inputs;
        at_tail.alpha = tail_alpha;
        entry.evaluated = disagreement_bound(at_tail);
      }
      double worst_margin = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j) {
        const auto [mean, se] = replica_stats(trace.tail_disagreement, replicas, m, j, 0.0);
        BoundEntry trial = entry;
        set_verdict(trial, mean, se, slack);
        if (*trial.margin < worst_margin) {
          worst_margin = *trial.margin;
          entry = trial;
        }
      }
      entry.note += "; empirical: tail mean over the final " + std::to_string(rows - tail) + " rows, worst agent";
      continue;
    }

    if (!report.f_star) {
      entry.note += "; f* unknown, no verdict";
      continue;
    }
    const double f_star = *report.f_star;

    if (entry.kind == BoundKind::kFiniteTime) {
      const auto it = std::find(trace.k.begin(), trace.k.end(), entry.t);
      if (it == trace.k.end()) {
        entry.note += "; t not recorded";
        continue;
      }
      const auto row = static_cast<std::size_t>(it - trace.k.begin());
      double worst_margin = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j) {
        BoundEntry trial = entry;
        set_verdict(trial, trace.average_value.mean[row * m + j] - f_star, trace.average_value.se[row * m + j], slack);
        if (*trial.margin < worst_margin) {
          worst_margin = *trial.margin;
          entry = trial;
        }
      }
      continue;
    }

    if (surrogate) entry.evaluated = function_value_bound(report.inputs) -
                                     function_value_alpha_term(report.inputs, report.inputs.alpha) +
                                     function_value_alpha_term(report.inputs, tail_alpha);

    if (entry.name == "function_value") {
      double worst_margin = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j) {
        std::size_t best = 0;
        for (std::size_t r = 1; r < rows; ++r)
          if (trace.iterate_value.mean[r * m + j] < trace.iterate_value.mean[best * m + j]) best = r;
        BoundEntry trial = entry;
        set_verdict(trial, trace.iterate_value.mean[best * m + j] - f_star, trace.iterate_value.se[best * m + j], slack);
        if (*trial.margin < worst_margin) {
          worst_margin = *trial.margin;
          entry = trial;
        }
      }
      entry.note += "; empirical: running minimum of the mean, worst agent";
    } else if (entry.name == "averaged") {
      double worst_margin = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j) {
        const auto [mean, se] = replica_stats(trace.tail_average_value, replicas, m, j, f_star);
        BoundEntry trial = entry;
        set_verdict(trial, mean, se, slack);
        if (*trial.margin < worst_margin) {
          worst_margin = *trial.margin;
          entry = trial;
        }
      }
      entry.note += "; empirical: tail mean over the final " + std::to_string(rows - tail) + " rows, worst agent";
    }
  }
  if (surrogate)
    report.flags.push_back("asymptotic bounds evaluated at the tail stepsize " + std::to_string(tail_alpha));
}

void to_json(nlohmann::json& j, const BoundInputs& in) {
  j = nlohmann::json{{"m", in.agents},
                     {"theta", in.theta},
                     {"beta", in.beta},
                     {"eta", in.eta},
                     {"Q", in.window},
                     {"C", in.c},
                     {"nu", in.nu},
                     {"mu", in.mu},
                     {"alpha", in.alpha},
                     {"initial_distance_sq", in.initial_distance_sq},
                     {"max_initial_norm", in.max_initial_norm}};
  j["diameter"] = std::isfinite(in.diameter) ? nlohmann::json(in.diameter) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const StoppingRule& rule) {
  j = nlohmann::json{{"A", rule.a},     {"B", rule.b},         {"C", rule.c},
                     {"eps", rule.eps}, {"psi", rule.psi},     {"alpha", rule.alpha},
                     {"iterations", rule.iterations}};
}

void to_json(nlohmann::json& j, const RunConstants& constants) {
  j = nlohmann::json{{"A", constants.a}, {"B", constants.b}, {"C", constants.c}};
}

void to_json(nlohmann::json& j, const BoundEntry& entry) {
  j = nlohmann::json{{"name", entry.name}, {"kind", kind_name(entry.kind)}, {"value", entry.value}};
  if (entry.kind == BoundKind::kFiniteTime) j["t"] = entry.t;
  if (entry.evaluated) j["evaluated"] = *entry.evaluated;
  if (entry.empirical) j["empirical"] = *entry.empirical;
  if (entry.standard_error) j["standard_error"] = *entry.standard_error;
  if (entry.margin) j["margin"] = *entry.margin;
  if (entry.pass) j["pass"] = *entry.pass;
  if (!entry.note.empty()) j["note"] = entry.note;
}

void to_json(nlohmann::json& j, const BoundReport& report) {
  j = nlohmann::json{{"inputs", report.inputs}, {"bounds", report.entries}, {"flags", report.flags}};
  j["f_star"] = report.f_star ? nlohmann::json(*report.f_star) : nlohmann::json(nullptr);
  if (report.constants) j["constants"] = *report.constants;
  if (report.stopping) j["stopping_rule"] = *report.stopping;
  j["passed"] = report.passed();
}

}  // namespace netopt
