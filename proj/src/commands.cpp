#include "netopt/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "netopt/bounds.hpp"

namespace netopt {

namespace {

using nlohmann::json;

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.12g", x);
  return buffer;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

struct Reference {
  std::optional<double> value;
  std::optional<Vector> point;
  std::string source = "unknown";
};

// Declared optimum, else the grid reference solver where it applies.
Reference resolve_optimum(const Problem& problem) {
  Reference out;
  if (const auto& opt = problem.optimum()) {
    out.value = opt->value;
    out.point = opt->point;
    out.source = "declared";
  } else if (problem.set().bounded() && problem.dimension() <= 4) {
    const Optimum opt = solve_reference(problem);
    out.value = opt.value;
    out.point = opt.point;
    out.source = "reference_solver";
  }
  return out;
}

std::vector<Iteration> default_times(Iteration horizon) {
  std::vector<Iteration> out;
  for (Iteration t = 1; t < horizon; t *= 10) out.push_back(t);
  out.push_back(horizon);
  return out;
}

// Closed-form inputs with declared moment overrides applied.
BoundInputs inputs_for(const Simulator& sim, const RunConfig& rc, const Reference& ref, const RunTrace* first) {
  BoundInputs in = first && ref.point ? bound_inputs(sim, *first, *ref.point) : bound_inputs(sim);
  if (rc.experiment.declared_nu) in.nu = *rc.experiment.declared_nu;
  if (rc.experiment.declared_mu) in.mu = *rc.experiment.declared_mu;
  return in;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file << text;
}

using Column = std::pair<std::string, std::vector<double>>;

std::vector<Column> trace_columns(const AggregatedTrace& trace) {
  const std::size_t rows = trace.rows();
  const std::size_t m = trace.agents;
  const bool single = trace.replicas == 1;
  std::vector<Column> columns;
  columns.push_back({"k", std::vector<double>(trace.k.begin(), trace.k.end())});
  columns.push_back({"alpha", trace.alpha});
  if (single) {
    columns.push_back({"f_y", trace.network_value.mean});
  } else {
    columns.push_back({"f_y_mean", trace.network_value.mean});
    columns.push_back({"f_y_se", trace.network_value.se});
  }
  const std::pair<const char*, Metric> metrics[] = {{"disagreement", Metric::kDisagreement},
                                                    {"f_w", Metric::kIterateValue},
                                                    {"f_z", Metric::kAverageValue},
                                                    {"step_norm", Metric::kStepNorm}};
  for (const auto& [name, metric] : metrics) {
    const MetricStats& stats = trace.stats(metric);
    for (int part = 0; part < (single ? 1 : 2); ++part) {
      const std::vector<double>& source = part == 0 ? stats.mean : stats.se;
      for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> values(rows);
        for (std::size_t r = 0; r < rows; ++r) values[r] = source[r * m + j];
        std::string label = name;
        if (!single) label += part == 0 ? "_mean" : "_se";
        columns.push_back({label + "_" + std::to_string(j), std::move(values)});
      }
    }
  }
  return columns;
}

std::string render_csv(const std::vector<Column>& columns) {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c].first;
  out += "\n";
  const std::size_t rows = columns.empty() ? 0 : columns.front().second.size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ",";
      const double x = columns[c].second[r];
      out += c == 0 ? std::to_string(static_cast<Iteration>(x)) : num(x);
    }
    out += "\n";
  }
  return out;
}

json checks_json(const CheckReport& report) {
  return json{{"feasibility_violations", report.feasibility_violations},
              {"displacement_checked", report.displacement_checked},
              {"displacement_violations", report.displacement_violations},
              {"disagreement_checked", report.disagreement_checked},
              {"disagreement_violations", report.disagreement_violations},
              {"disagreement_worst_ratio", report.disagreement_worst_ratio},
              {"relation_checked", report.relation_checked},
              {"relation_violations", report.relation_violations},
              {"messages", report.messages},
              {"passed", report.passed()}};
}

// Connectivity over the horizon; returns the failing window starts.
std::vector<Iteration> topology_violations(const RunConfig& rc, std::ostream& err) {
  const TopologySchedule& topology = rc.sim.weights.topology();
  if (rc.sim.horizon < topology.window()) {
    err << "note: horizon shorter than the window Q = " << topology.window() << ", connectivity not checked\n";
    return {};
  }
  return verify_schedule(topology, rc.sim.horizon);
}

void print_windows(const std::vector<Iteration>& bad, int window, std::ostream& err) {
  err << "Q-window connectivity fails (Q = " << window << ") for " << bad.size() << " window(s) starting at k =";
  for (std::size_t i = 0; i < bad.size() && i < 10; ++i) err << " " << bad[i];
  if (bad.size() > 10) err << " ...";
  err << "\n";
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CheckFailure& e) {
    err << "check failed: " << e.what() << "\n";
    return kExitCheck;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitCheck;
  } catch (const AssumptionViolation& e) {
    err << "assumption violated: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

// Single-run or Monte Carlo execution with replica 0 kept for initial data.
struct Execution {
  AggregatedTrace aggregated;
  std::optional<RunTrace> first;
};

Execution execute(const Simulator& sim, const RunConfig& rc) {
  Execution out;
  MonteCarloOptions options;
  options.threads = rc.experiment.threads;
  options.tail_fraction = rc.experiment.tail_fraction;
  options.on_trace = [&](std::size_t replica, const RunTrace& trace) {
    if (replica == 0) out.first = trace;
  };
  out.aggregated = monte_carlo(sim.config(), rc.experiment.replicas, options);
  return out;
}

}  // namespace

RunConfig load_config(const CommonOptions& options) {
  json document = read_config(options.config);
  if (!document.is_object()) throw ConfigError("config", "top level must be an object");
  for (const std::string& assignment : options.overrides) apply_override(document, assignment);
  if (options.seed) set_path(document, "engine.seed", *options.seed);
  if (options.replicas) set_path(document, "engine.replicas", *options.replicas);
  if (options.format) set_path(document, "output.format", *options.format);
  if (options.out_dir) {
    set_path(document, "output.dir", *options.out_dir);
  } else if (const char* env = std::getenv(kOutDirEnv);
             env && *env && !(document.contains("output") && document["output"].contains("dir"))) {
    set_path(document, "output.dir", std::string(env));
  }
  return build_config(document);
}

int cmd_run(const CommonOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = std::chrono::steady_clock::now();
    const RunConfig rc = load_config(options);
    const int window = rc.sim.weights.topology().window();
    bool failed = false;
    if (rc.experiment.verify_topology) {
      const auto bad = topology_violations(rc, err);
      if (!bad.empty()) {
        print_windows(bad, window, err);
        if (rc.sim.checks.policy == CheckPolicy::kAbort) return kExitCheck;
        failed = true;
      }
    }

    const Simulator sim(rc.sim);
    const Reference ref = resolve_optimum(rc.sim.problem);
    Execution run = execute(sim, rc);
    const AggregatedTrace& agg = run.aggregated;

    json bounds;
    std::optional<BoundReport> report;
    try {
      const std::vector<Iteration> times = rc.experiment.times.empty() ? default_times(rc.sim.horizon)
                                                                        : rc.experiment.times;
      report = evaluate_bounds(inputs_for(sim, rc, ref, run.first ? &*run.first : nullptr), ref.value, times);
      if (rc.experiment.verdicts) bound_vs_empirical(*report, agg);
      bounds = *report;
    } catch (const std::domain_error& e) {
      bounds = json{{"unavailable", e.what()}};
    }

    const std::size_t m = agg.agents;
    const std::size_t last = agg.rows() - 1;
    json agents = json::array();
    for (std::size_t j = 0; j < m; ++j) {
      json a{{"agent", j},
             {"disagreement", agg.disagreement.mean[last * m + j]},
             {"f_w", agg.iterate_value.mean[last * m + j]},
             {"f_z", agg.average_value.mean[last * m + j]}};
      if (agg.replicas > 1) {
        a["disagreement_se"] = agg.disagreement.se[last * m + j];
        a["f_w_se"] = agg.iterate_value.se[last * m + j];
        a["f_z_se"] = agg.average_value.se[last * m + j];
      } else if (run.first) {
        a["w"] = to_std(run.first->final_iterates.col(static_cast<Index>(j)));
        a["z"] = to_std(run.first->final_averages.col(static_cast<Index>(j)));
      }
      agents.push_back(std::move(a));
    }

    json verdicts = json::object();
    if (report)
      for (const BoundEntry& e : report->entries)
        if (e.pass) verdicts[e.name] = *e.pass;
    const bool checks_ok = agg.checks.passed();
    const bool verdicts_ok = !report || report->passed();

    json summary{{"config_digest", config_digest(rc.document)},
                 {"config", rc.document},
                 {"seed", rc.sim.seed},
                 {"replicas", agg.replicas},
                 {"horizon", rc.sim.horizon},
                 {"certificate",
                  {{"theta", sim.certificate().theta},
                   {"beta", sim.certificate().beta},
                   {"eta", sim.eta()},
                   {"Q", window}}},
                 {"f_star", ref.value ? json(*ref.value) : json(nullptr)},
                 {"f_star_source", ref.source},
                 {"final", {{"f_y", agg.network_value.mean[last]}, {"f_y_se", agg.network_value.se[last]}, {"agents", agents}}},
                 {"checks", checks_json(agg.checks)},
                 {"bounds", bounds},
                 {"verdicts", verdicts},
                 {"passed", checks_ok && verdicts_ok && !failed}};
    summary["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const std::filesystem::path dir(rc.output.dir);
    std::filesystem::create_directories(dir);
    const auto columns = trace_columns(agg);
    std::filesystem::path trace_path;
    if (rc.output.format == "csv") {
      trace_path = dir / (rc.output.prefix + "_trace.csv");
      write_file(trace_path, render_csv(columns));
    } else {
      trace_path = dir / (rc.output.prefix + "_trace.json");
      json table = json::object();
      for (const auto& [name, values] : columns) table[name] = values;
      write_file(trace_path, table.dump(1) + "\n");
    }
    const auto summary_path = dir / (rc.output.prefix + "_summary.json");
    write_file(summary_path, summary.dump(2) + "\n");
    out << "wrote " << trace_path.string() << "\n";
    out << "wrote " << summary_path.string() << "\n";

    for (const std::string& message : agg.checks.messages) err << "warning: " << message << "\n";
    if (report) {
      for (const BoundEntry& e : report->entries) {
        if (!e.pass) {
          err << "no verdict for " << e.name << ": " << e.note << "\n";
          continue;
        }
        out << (*e.pass ? "PASS " : "FAIL ") << e.name << ": empirical " << num(*e.empirical) << " vs bound "
            << num(e.evaluated.value_or(e.value)) << " (se " << num(*e.standard_error) << ")\n";
      }
      for (const std::string& flag : report->flags) err << "note: " << flag << "\n";
    }
    if (rc.sim.checks.policy == CheckPolicy::kAbort && !(checks_ok && verdicts_ok)) return kExitCheck;
    return kExitOk;
  });
}

int cmd_bounds(const CommonOptions& options, const BoundsOptions& bounds, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig rc = load_config(options);
    const Simulator sim(rc.sim);
    const Reference ref = resolve_optimum(rc.sim.problem);
    BoundInputs in = inputs_for(sim, rc, ref, nullptr);
    std::string initial_source = "diameter";
    if (bounds.trace) {
      const json summary = read_config(*bounds.trace);
      const json* inputs = summary.contains("bounds") && summary["bounds"].contains("inputs")
                               ? &summary["bounds"]["inputs"]
                               : nullptr;
      if (!inputs || !(*inputs)["initial_distance_sq"].is_number() || !(*inputs)["max_initial_norm"].is_number())
        throw ConfigError("trace", "summary has no bounds.inputs with initial data");
      in.initial_distance_sq = (*inputs)["initial_distance_sq"].get<double>();
      in.max_initial_norm = (*inputs)["max_initial_norm"].get<double>();
      initial_source = "trace";
    }

    BoundReport report;
    try {
      const std::vector<Iteration> times =
          rc.experiment.times.empty() ? default_times(rc.sim.horizon) : rc.experiment.times;
      report = evaluate_bounds(in, ref.value, times);
    } catch (const std::domain_error& e) {
      err << "bounds unavailable: " << e.what() << "\n";
      return kExitConfig;
    }
    if (bounds.eps) {
      if (!(*bounds.eps > 0.0)) throw ConfigError("eps", "must be > 0");
      const RunConstants k = *report.constants;
      if (k.a > 0.0 && k.c > 0.0) {
        report.stopping = stopping_rule(k.a, k.b, k.c, *bounds.eps);
      } else {
        report.flags.push_back("stopping rule needs A > 0 and C > 0");
      }
    }
    json doc = report;
    doc["config_digest"] = config_digest(rc.document);
    doc["f_star_source"] = ref.source;
    doc["initial_data"] = initial_source;
    doc["diameter"] = finite_or_null(in.diameter);
    out << doc.dump(2) << "\n";
    return kExitOk;
  });
}

int cmd_sweep(const CommonOptions& options, const SweepOptions& sweep, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    static const std::vector<std::string> sweepable = {"alpha", "sigma", "m", "Q", "eta"};
    if (std::find(sweepable.begin(), sweepable.end(), sweep.parameter) == sweepable.end())
      throw ConfigError("sweep", "'" + sweep.parameter + "' is not sweepable; use alpha, sigma, m, Q or eta");

    const RunConfig base = load_config(options);
    std::string csv =
        "parameter,value,m,Q,eta,theta,beta,disagreement_bound,function_value_bound,alpha_term,"
        "tail_disagreement,tail_disagreement_se,tail_f_z,tail_f_z_se,f_star,passed\n";
    for (double value : sweep.values) {
      json document = base.document;
      auto integral = [&](const char* key) {
        if (std::floor(value) != value || value < 1.0) throw ConfigError(key, "sweep value must be a positive integer");
        return static_cast<std::int64_t>(value);
      };
      if (sweep.parameter == "alpha") {
        set_path(document, "stepsize.a", value);
      } else if (sweep.parameter == "sigma") {
        if (!document.contains("noise") || document["noise"].value("type", "none") == "none")
          set_path(document, "noise.type", "gaussian");
        set_path(document, "noise.sigma", value);
      } else if (sweep.parameter == "m") {
        set_path(document, "problem.agents", integral("problem.agents"));
        // a declared optimum and per-agent bounds belong to the original agent count
        document["problem"].erase("optimum");
        document["problem"].erase("subgradient_bounds");
      } else if (sweep.parameter == "Q") {
        set_path(document, "topology.window", integral("topology.window"));
      } else {
        set_path(document, "weights.rule", "constant");
        set_path(document, "weights.eta", value);
      }
      const RunConfig rc = build_config(document);
      const Simulator sim(rc.sim);
      const Reference ref = resolve_optimum(rc.sim.problem);

      std::optional<Execution> run;
      if (!sweep.bounds_only) run = execute(sim, rc);
      std::optional<BoundReport> report;
      try {
        report = evaluate_bounds(inputs_for(sim, rc, ref, run && run->first ? &*run->first : nullptr), ref.value);
        if (run && rc.experiment.verdicts) bound_vs_empirical(*report, run->aggregated);
      } catch (const std::domain_error& e) {
        err << "note: bounds unavailable at " << sweep.parameter << " = " << num(value) << ": " << e.what() << "\n";
      }

      csv += sweep.parameter + "," + num(value) + "," + std::to_string(sim.agents()) + "," +
             std::to_string(rc.sim.weights.topology().window()) + "," + num(sim.eta()) + "," +
             num(sim.certificate().theta) + "," + num(sim.certificate().beta) + ",";
      if (report) {
        csv += num(report->entry("disagreement").value) + "," + num(report->entry("function_value").value) + "," +
               num(function_value_alpha_term(report->inputs, report->inputs.alpha)) + ",";
      } else {
        csv += ",,,";
      }
      if (run) {
        const AggregatedTrace& agg = run->aggregated;
        const std::size_t m = agg.agents;
        const double shift = ref.value.value_or(0.0);
        double dis = 0.0, dis_se = 0.0, fz = -std::numeric_limits<double>::infinity(), fz_se = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          double d = 0.0, d2 = 0.0, v = 0.0, v2 = 0.0;
          for (std::size_t r = 0; r < agg.replicas; ++r) {
            d += agg.tail_disagreement[r * m + j];
            d2 += agg.tail_disagreement[r * m + j] * agg.tail_disagreement[r * m + j];
            const double x = agg.tail_average_value[r * m + j] - shift;
            v += x;
            v2 += x * x;
          }
          const double reps = static_cast<double>(agg.replicas);
          auto se = [&](double s, double s2) {
            return agg.replicas > 1 ? std::sqrt(std::max(0.0, (s2 - s * s / reps) / (reps - 1.0)) / reps) : 0.0;
          };
          if (d / reps >= dis) {
            dis = d / reps;
            dis_se = se(d, d2);
          }
          if (v / reps > fz) {
            fz = v / reps;
            fz_se = se(v, v2);
          }
        }
        csv += num(dis) + "," + num(dis_se) + "," + num(fz) + "," + num(fz_se) + ",";
      } else {
        csv += ",,,,";
      }
      csv += (ref.value ? num(*ref.value) : std::string()) + ",";
      csv += report && run ? (report->passed() && run->aggregated.checks.passed() ? "true" : "false") : "";
      csv += "\n";
    }
    out << csv;
    const std::filesystem::path dir(base.output.dir);
    std::filesystem::create_directories(dir);
    write_file(dir / (base.output.prefix + "_sweep.csv"), csv);
    return kExitOk;
  });
}

int cmd_check_topology(const CommonOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig rc = load_config(options);
    const TopologySchedule& topology = rc.sim.weights.topology();
    const auto bad = topology_violations(rc, err);
    const Iteration rate_horizon = std::min<Iteration>(rc.sim.horizon, 1000);
    const GeometricRateReport rate = verify_geometric_rate(rc.sim.weights, 0, rate_horizon);
    const char* kinds[] = {"static", "periodic", "random"};
    json doc{{"agents", topology.agents()},
             {"window", topology.window()},
             {"kind", kinds[static_cast<int>(topology.kind())]},
             {"horizon", rc.sim.horizon},
             {"connectivity_violations", bad},
             {"connected", bad.empty()},
             {"geometric_rate", rate}};
    out << doc.dump(2) << "\n";
    if (!bad.empty()) {
      print_windows(bad, topology.window(), err);
      return kExitCheck;
    }
    return rate.holds() ? kExitOk : kExitCheck;
  });
}

}  // namespace netopt
