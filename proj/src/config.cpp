#include "netopt/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace netopt {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Object node whose keys are consumed one by one; leftovers are unknown keys.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const noexcept { return path_; }
  std::string key(const std::string& name) const { return join(path_, name); }
  bool has(const std::string& name) const { return node_.contains(name); }

  const json* find(const std::string& name) {
    used_.insert(name);
    const auto it = node_.find(name);
    return it == node_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& name) {
    const json* node = find(name);
    if (!node) throw ConfigError(key(name), "missing required key");
    return *node;
  }

  double number(const std::string& name, std::optional<double> fallback = std::nullopt) {
    const json* node = find(name);
    if (!node) {
      if (!fallback) throw ConfigError(key(name), "missing required key");
      return *fallback;
    }
    if (!node->is_number()) throw ConfigError(key(name), "expected a number");
    const double value = node->get<double>();
    if (!std::isfinite(value)) throw ConfigError(key(name), "expected a finite number");
    return value;
  }

  std::int64_t integer(const std::string& name, std::optional<std::int64_t> fallback = std::nullopt) {
    const json* node = find(name);
    if (!node) {
      if (!fallback) throw ConfigError(key(name), "missing required key");
      return *fallback;
    }
    if (node->is_number_integer()) return node->get<std::int64_t>();
    if (node->is_number_float()) {
      const double value = node->get<double>();
      if (std::floor(value) == value && std::abs(value) < 9e15) return static_cast<std::int64_t>(value);
    }
    throw ConfigError(key(name), "expected an integer");
  }

  bool boolean(const std::string& name, bool fallback) {
    const json* node = find(name);
    if (!node) return fallback;
    if (!node->is_boolean()) throw ConfigError(key(name), "expected true or false");
    return node->get<bool>();
  }

  std::string string(const std::string& name, std::optional<std::string> fallback = std::nullopt) {
    const json* node = find(name);
    if (!node) {
      if (!fallback) throw ConfigError(key(name), "missing required key");
      return *fallback;
    }
    if (!node->is_string()) throw ConfigError(key(name), "expected a string");
    return node->get<std::string>();
  }

  Section child(const std::string& name) {
    static const json empty = json::object();
    const json* node = find(name);
    return Section(node ? *node : empty, key(name));
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

std::string one_of(const std::string& value, std::initializer_list<const char*> options) {
  std::string out = "expected one of";
  for (const char* o : options) out += std::string(" ") + o;
  return out + ", got '" + value + "'";
}

double as_number(const json& node, const std::string& key) {
  if (!node.is_number()) throw ConfigError(key, "expected a number");
  return node.get<double>();
}

// A number broadcasts to every coordinate; an array must have length n.
Vector vector_of(const json& node, Index n, const std::string& key) {
  if (node.is_number()) return Vector::Constant(n, node.get<double>());
  if (!node.is_array()) throw ConfigError(key, "expected a number or an array");
  if (static_cast<Index>(node.size()) != n)
    throw ConfigError(key, "expected " + std::to_string(n) + " entries, got " + std::to_string(node.size()));
  Vector out(n);
  for (Index d = 0; d < n; ++d) out(d) = as_number(node[static_cast<std::size_t>(d)], key);
  if (!out.allFinite()) throw ConfigError(key, "entries must be finite");
  return out;
}

// Unconstrained length; used where the dimension is not known yet.
Vector free_vector(const json& node, const std::string& key) {
  if (node.is_number()) return Vector::Constant(1, node.get<double>());
  if (!node.is_array() || node.empty()) throw ConfigError(key, "expected a nonempty array");
  return vector_of(node, static_cast<Index>(node.size()), key);
}

// A number broadcasts to every agent; an array is repeated cyclically.
std::vector<double> per_agent(const json& node, std::size_t m, const std::string& key, bool nonnegative) {
  std::vector<double> out;
  if (node.is_number()) {
    out.assign(m, node.get<double>());
  } else if (node.is_array() && !node.empty()) {
    for (std::size_t i = 0; i < m; ++i) out.push_back(as_number(node[i % node.size()], key));
  } else {
    throw ConfigError(key, "expected a number or a nonempty array");
  }
  for (double v : out) {
    if (!std::isfinite(v)) throw ConfigError(key, "expected finite values");
    if (nonnegative && v < 0.0) throw ConfigError(key, "must be >= 0");
  }
  return out;
}

ConvexSet parse_set(Section s) {
  const std::string type = s.string("type");
  ConvexSet set = [&] {
    if (type == "box") {
      const Vector lower = free_vector(s.require("lower"), s.key("lower"));
      const Vector upper = vector_of(s.require("upper"), lower.size(), s.key("upper"));
      if ((lower.array() > upper.array()).any()) throw ConfigError(s.key("upper"), "must be >= lower");
      return ConvexSet::box(lower, upper);
    }
    if (type == "ball") {
      const double radius = s.number("radius");
      if (!(radius >= 0.0)) throw ConfigError(s.key("radius"), "must be >= 0");
      return ConvexSet::ball(free_vector(s.require("center"), s.key("center")), radius);
    }
    if (type == "simplex") {
      const auto n = s.integer("dimension");
      if (n < 1) throw ConfigError(s.key("dimension"), "must be >= 1");
      return ConvexSet::simplex(n);
    }
    if (type == "halfspace") {
      const Vector normal = free_vector(s.require("normal"), s.key("normal"));
      if (normal.norm() == 0.0) throw ConfigError(s.key("normal"), "must be nonzero");
      return ConvexSet::halfspace(normal, s.number("offset"));
    }
    if (type == "whole_space") {
      const auto n = s.integer("dimension");
      if (n < 1) throw ConfigError(s.key("dimension"), "must be >= 1");
      return ConvexSet::whole_space(n);
    }
    throw ConfigError(s.key("type"), one_of(type, {"box", "ball", "simplex", "halfspace", "whole_space"}));
  }();
  s.finish();
  return set;
}

Component parse_component(Section s, Index n) {
  const std::string type = s.string("type");
  Component f = [&]() -> Component {
    if (type == "quadratic") return Component(Quadratic{vector_of(s.require("center"), n, s.key("center"))});
    if (type == "weighted_quadratic") {
      const Vector weights = vector_of(s.require("weights"), n, s.key("weights"));
      if ((weights.array() < 0.0).any()) throw ConfigError(s.key("weights"), "must be >= 0");
      return Component(WeightedQuadratic{vector_of(s.require("center"), n, s.key("center")), weights});
    }
    if (type == "absolute_deviation") return Component(AbsoluteDeviation{vector_of(s.require("center"), n, s.key("center"))});
    if (type == "hinge") return Component(Hinge{vector_of(s.require("normal"), n, s.key("normal")), s.number("offset", 0.0)});
    throw ConfigError(s.key("type"), one_of(type, {"quadratic", "weighted_quadratic", "absolute_deviation", "hinge"}));
  }();
  s.finish();
  return f;
}

struct ProblemSection {
  Problem problem;
  std::optional<std::vector<double>> subgradient_bounds;
};

ProblemSection parse_problem(Section s) {
  const ConvexSet set = parse_set(s.child("set"));
  const Index n = set.dimension();
  const json& list = s.require("components");
  if (!list.is_array() || list.empty()) throw ConfigError(s.key("components"), "expected a nonempty array");
  std::vector<Component> base;
  for (std::size_t i = 0; i < list.size(); ++i)
    base.push_back(parse_component(Section(list[i], s.key("components") + "[" + std::to_string(i) + "]"), n));
  const auto m = s.integer("agents", static_cast<std::int64_t>(base.size()));
  if (m < 1) throw ConfigError(s.key("agents"), "must be >= 1");
  std::vector<Component> components;
  for (std::int64_t i = 0; i < m; ++i) components.push_back(base[static_cast<std::size_t>(i) % base.size()]);

  std::optional<Optimum> optimum;
  if (s.has("optimum")) {
    Section o = s.child("optimum");
    optimum = Optimum{o.number("value"), vector_of(o.require("point"), n, o.key("point"))};
    o.finish();
  }
  std::optional<std::vector<double>> bounds;
  if (const json* node = s.find("subgradient_bounds"))
    bounds = per_agent(*node, static_cast<std::size_t>(m), s.key("subgradient_bounds"), true);
  s.finish();
  try {
    return {Problem(std::move(components), set, std::move(optimum)), std::move(bounds)};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.key("optimum"), e.what());
  }
}

EdgeSet family(const std::string& name, std::size_t m, const std::string& key) {
  if (name == "complete") return EdgeSet::complete(m);
  if (name == "ring") return EdgeSet::ring(m);
  if (name == "path") return EdgeSet::path(m);
  if (name == "star") return EdgeSet::star(m);
  throw ConfigError(key, one_of(name, {"complete", "ring", "path", "star"}));
}

std::vector<Edge> edge_list(const json& node, std::size_t m, const std::string& key) {
  if (!node.is_array()) throw ConfigError(key, "expected an array of [from, to] pairs");
  std::vector<Edge> out;
  for (const json& pair : node) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() || !pair[1].is_number_unsigned())
      throw ConfigError(key, "expected [from, to] pairs of agent indices");
    const auto a = pair[0].get<std::size_t>();
    const auto b = pair[1].get<std::size_t>();
    if (a >= m || b >= m) throw ConfigError(key, "agent index out of range");
    out.push_back({a, b});
  }
  return out;
}

int window_of(Section& s) {
  const auto q = s.integer("window", 1);
  if (q < 1) throw ConfigError(s.key("window"), "must be >= 1");
  return static_cast<int>(q);
}

TopologySchedule parse_topology(Section s, std::size_t m) {
  const std::string type = s.string("type", "complete");
  std::optional<TopologySchedule> out;
  if (type == "complete" || type == "ring" || type == "path" || type == "star") {
    const int q = window_of(s);
    const EdgeSet whole = family(type, m, s.key("type"));
    if (q == 1) {
      out = TopologySchedule::fixed(whole, 1, Validation::kSkip);
    } else {
      // Links are dealt round-robin into Q phases; every window of Q phases covers the family.
      std::vector<std::vector<Edge>> dealt(static_cast<std::size_t>(q));
      std::size_t next = 0;
      for (const Edge& e : whole.links())
        if (e.from < e.to) dealt[next++ % dealt.size()].push_back(e);
      std::vector<EdgeSet> phases;
      for (const auto& links : dealt) phases.push_back(EdgeSet::undirected(m, links));
      out = TopologySchedule::periodic(std::move(phases), q, Validation::kSkip);
    }
  } else if (type == "edges") {
    const int q = window_of(s);
    const auto links = edge_list(s.require("edges"), m, s.key("edges"));
    const bool undirected = s.boolean("undirected", true);
    out = TopologySchedule::fixed(undirected ? EdgeSet::undirected(m, links) : EdgeSet(m, links), q,
                                  Validation::kSkip);
  } else if (type == "periodic") {
    const int q = window_of(s);
    const bool undirected = s.boolean("undirected", true);
    const json& list = s.require("phases");
    if (!list.is_array() || list.empty()) throw ConfigError(s.key("phases"), "expected a nonempty array of edge lists");
    std::vector<EdgeSet> phases;
    for (std::size_t p = 0; p < list.size(); ++p) {
      const std::string key = s.key("phases") + "[" + std::to_string(p) + "]";
      const auto links = edge_list(list[p], m, key);
      phases.push_back(undirected ? EdgeSet::undirected(m, links) : EdgeSet(m, links));
    }
    out = TopologySchedule::periodic(std::move(phases), q, Validation::kSkip);
  } else if (type == "random") {
    const int q = window_of(s);
    const double p = s.number("activation");
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError(s.key("activation"), "must lie in (0, 1]");
    const std::string base = s.string("base", "complete");
    const EdgeSet edges =
        base == "edges" ? EdgeSet::undirected(m, edge_list(s.require("edges"), m, s.key("edges")))
                        : family(base, m, s.key("base"));
    out = TopologySchedule::random(edges, p, static_cast<std::uint64_t>(s.integer("seed", 0)), q);
  } else {
    throw ConfigError(s.key("type"), one_of(type, {"complete", "ring", "path", "star", "edges", "periodic", "random"}));
  }
  s.finish();
  return *out;
}

// a_ij = η on every link, remainder on the diagonal.
MixingMatrix constant_weights(const EdgeSet& edges, double eta, const std::string& key) {
  const std::size_t m = edges.agents();
  Matrix a = Matrix::Zero(static_cast<Index>(m), static_cast<Index>(m));
  for (AgentId i = 0; i < m; ++i) {
    for (AgentId j = 0; j < m; ++j)
      if (j != i && edges.contains(j, i)) a(static_cast<Index>(i), static_cast<Index>(j)) = eta;
    const double diagonal = 1.0 - eta * static_cast<double>(edges.degree(i));
    if (diagonal < eta && m > 1)
      throw ConfigError(key, "eta too large for degree " + std::to_string(edges.degree(i)) +
                                 ": the diagonal weight would fall below eta");
    a(static_cast<Index>(i), static_cast<Index>(i)) = diagonal;
  }
  try {
    return MixingMatrix(std::move(a));
  } catch (const AssumptionViolation& e) {
    throw ConfigError(key, e.what());
  }
}

WeightSchedule parse_weights(Section s, TopologySchedule topology) {
  const std::string rule = s.string("rule", "metropolis");
  std::optional<WeightSchedule> out;
  try {
    if (rule == "metropolis") {
      out = WeightSchedule::metropolis(std::move(topology));
    } else if (rule == "equal_neighbor") {
      out = WeightSchedule::equal_neighbor(std::move(topology));
    } else if (rule == "constant") {
      const double eta = s.number("eta");
      if (!(eta > 0.0 && eta < 1.0)) throw ConfigError(s.key("eta"), "must lie in (0, 1)");
      if (topology.kind() == ScheduleKind::kRandom)
        throw ConfigError(s.key("rule"), "constant weights need a deterministic topology");
      std::vector<MixingMatrix> matrices;
      for (std::size_t p = 0; p < topology.period(); ++p)
        matrices.push_back(constant_weights(topology.edges(static_cast<Iteration>(p) + 1), eta, s.key("eta")));
      out = WeightSchedule::explicit_list(std::move(matrices), std::move(topology));
    } else if (rule == "explicit") {
      const json& list = s.require("matrices");
      if (!list.is_array() || list.empty()) throw ConfigError(s.key("matrices"), "expected a nonempty array");
      const auto m = static_cast<Index>(topology.agents());
      std::vector<MixingMatrix> matrices;
      for (std::size_t t = 0; t < list.size(); ++t) {
        const std::string key = s.key("matrices") + "[" + std::to_string(t) + "]";
        if (!list[t].is_array() || static_cast<Index>(list[t].size()) != m)
          throw ConfigError(key, "expected " + std::to_string(m) + " rows");
        Matrix a(m, m);
        for (Index i = 0; i < m; ++i) a.row(i) = vector_of(list[t][static_cast<std::size_t>(i)], m, key).transpose();
        try {
          matrices.emplace_back(std::move(a));
        } catch (const AssumptionViolation& e) {
          throw ConfigError(key, e.what());
        }
      }
      out = WeightSchedule::explicit_list(std::move(matrices), std::move(topology));
    } else {
      throw ConfigError(s.key("rule"), one_of(rule, {"metropolis", "equal_neighbor", "constant", "explicit"}));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.key("rule"), e.what());
  } catch (const AssumptionViolation& e) {
    throw ConfigError(s.path(), e.what());
  }
  s.finish();
  return *out;
}

NoiseModel parse_noise(Section s, std::size_t m, Index n, ExperimentOptions& experiment) {
  const std::string type = s.string("type", "none");
  auto sigma = [&] { return per_agent(s.require("sigma"), m, s.key("sigma"), true); };
  std::optional<NoiseModel::Variant> model;
  if (type == "none") {
    model = NoNoise{};
  } else if (type == "gaussian") {
    model = GaussianNoise{sigma()};
  } else if (type == "uniform_ball") {
    model = UniformBallNoise{per_agent(s.require("radius"), m, s.key("radius"), true)};
  } else if (type == "biased") {
    BiasSchedule bias;
    const json& node = s.require("bias");
    // One vector (or number) for every agent, or an array of per-agent vectors.
    if (node.is_array() && !node.empty() && node[0].is_array()) {
      for (std::size_t i = 0; i < m; ++i) bias.bias.push_back(vector_of(node[i % node.size()], n, s.key("bias")));
    } else {
      const Vector b = vector_of(node, n, s.key("bias"));
      bias.bias.assign(m, b);
    }
    bias.decay = s.number("decay", 0.0);
    if (bias.decay < 0.0) throw ConfigError(s.key("decay"), "must be >= 0");
    model = BiasedNoise{std::move(bias), s.has("sigma") ? sigma() : std::vector<double>(m, 0.0)};
  } else {
    throw ConfigError(s.key("type"), one_of(type, {"none", "gaussian", "uniform_ball", "biased"}));
  }
  if (const json* node = s.find("declared_nu")) experiment.declared_nu = per_agent(*node, m, s.key("declared_nu"), true);
  if (const json* node = s.find("declared_mu")) experiment.declared_mu = per_agent(*node, m, s.key("declared_mu"), true);
  s.finish();
  return NoiseModel(std::move(*model), m, n);
}

StepsizeSchedule parse_stepsize(Section s) {
  const std::string type = s.string("type", "constant");
  const double a = s.number("a");
  std::optional<StepsizeSchedule> out;
  if (type == "constant") {
    if (a < 0.0) throw ConfigError(s.key("a"), "must be >= 0");
    out = StepsizeSchedule::constant(a);
  } else if (type == "harmonic" || type == "power") {
    if (!(a > 0.0)) throw ConfigError(s.key("a"), "must be > 0");
    const double b = s.number("b", 0.0);
    if (!(b > -1.0)) throw ConfigError(s.key("b"), "must exceed -1");
    if (type == "harmonic") {
      out = StepsizeSchedule::harmonic(a, b);
    } else {
      const double p = s.number("p");
      if (!(p > 0.5 && p <= 1.0)) throw ConfigError(s.key("p"), "must lie in (0.5, 1]");
      out = StepsizeSchedule::power(a, b, p);
    }
  } else {
    throw ConfigError(s.key("type"), one_of(type, {"constant", "harmonic", "power"}));
  }
  s.finish();
  return *out;
}

}  // namespace

nlohmann::json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON in '") + path + "': " + e.what());
  }
}

void set_path(nlohmann::json& document, const std::string& dotted_key, nlohmann::json value) {
  if (dotted_key.empty()) throw ConfigError("set", "empty key");
  nlohmann::json* node = &document;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(dotted_key, "malformed key path");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError(dotted_key, "'" + part + "' is not inside an object");
      *node = nlohmann::json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

void apply_override(nlohmann::json& document, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("set", "expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set_path(document, key, std::move(value));
}

RunConfig build_config(const nlohmann::json& document) {
  Section root(document, "");
  ExperimentOptions experiment;
  ProblemSection problem = parse_problem(root.child("problem"));
  const std::size_t m = problem.problem.agents();
  const Index n = problem.problem.dimension();
  TopologySchedule topology = parse_topology(root.child("topology"), m);
  WeightSchedule weights = parse_weights(root.child("weights"), std::move(topology));
  NoiseModel noise = parse_noise(root.child("noise"), m, n, experiment);
  StepsizeSchedule stepsize = parse_stepsize(root.child("stepsize"));

  Section engine = root.child("engine");
  const Iteration horizon = engine.integer("horizon");
  if (horizon < 1) throw ConfigError(engine.key("horizon"), "must be >= 1");
  InitialIterates initial = UniformInitial{};
  if (const json* node = engine.find("initial")) {
    const std::string key = engine.key("initial");
    if (node->is_string()) {
      if (node->get<std::string>() != "uniform") throw ConfigError(key, "expected \"uniform\" or a list of points");
    } else if (node->is_array() && !node->empty()) {
      Matrix w0(n, static_cast<Index>(m));
      for (std::size_t i = 0; i < m; ++i) {
        w0.col(static_cast<Index>(i)) = vector_of((*node)[i % node->size()], n, key);
        if (!problem.problem.set().contains(w0.col(static_cast<Index>(i)), 1e-12))
          throw ConfigError(key, "initial point of agent " + std::to_string(i) + " lies outside X");
      }
      initial = std::move(w0);
    } else {
      throw ConfigError(key, "expected \"uniform\" or a list of points");
    }
  }
  if (std::holds_alternative<UniformInitial>(initial) && !problem.problem.set().bounded())
    throw ConfigError(engine.key("initial"), "uniform initial points need a bounded X; give explicit points");
  const auto seed = static_cast<std::uint64_t>(engine.integer("seed", 0));
  experiment.replicas = static_cast<int>(engine.integer("replicas", 1));
  if (experiment.replicas < 1) throw ConfigError(engine.key("replicas"), "must be >= 1");
  experiment.threads = static_cast<int>(engine.integer("threads", 1));
  if (experiment.threads < 1) throw ConfigError(engine.key("threads"), "must be >= 1");
  RecordOptions record;
  record.stride = engine.integer("record_stride", 1);
  if (record.stride < 1) throw ConfigError(engine.key("record_stride"), "must be >= 1");
  record.iterates = engine.boolean("record_iterates", false);
  engine.finish();

  Section output_section = root.child("output");
  OutputOptions output;
  output.dir = output_section.string("dir", ".");
  output.format = output_section.string("format", "csv");
  if (output.format != "csv" && output.format != "json")
    throw ConfigError(output_section.key("format"), one_of(output.format, {"csv", "json"}));
  output.prefix = output_section.string("prefix", "run");
  if (output.prefix.empty() || output.prefix.find('/') != std::string::npos)
    throw ConfigError(output_section.key("prefix"), "must be a plain file name stem");
  output_section.finish();

  Section c = root.child("checks");
  CheckOptions checks;
  const std::string policy = c.string("policy", "abort");
  if (policy == "abort" || policy == "strict") {
    checks.policy = CheckPolicy::kAbort;
  } else if (policy == "warn") {
    checks.policy = CheckPolicy::kWarn;
  } else {
    throw ConfigError(c.key("policy"), one_of(policy, {"abort", "strict", "warn"}));
  }
  checks.feasibility = c.boolean("feasibility", true);
  checks.displacement = c.boolean("displacement", false);
  checks.disagreement_bound = c.boolean("disagreement_bound", false);
  checks.iterate_relation_samples = static_cast<int>(c.integer("iterate_relation_samples", 0));
  checks.iterate_relation_points = static_cast<int>(c.integer("iterate_relation_points", 5));
  if (checks.iterate_relation_samples < 0) throw ConfigError(c.key("iterate_relation_samples"), "must be >= 0");
  if (checks.iterate_relation_points < 1) throw ConfigError(c.key("iterate_relation_points"), "must be >= 1");
  checks.tolerance = c.number("tolerance", 1e-9);
  if (!(checks.tolerance >= 0.0)) throw ConfigError(c.key("tolerance"), "must be >= 0");
  experiment.verify_topology = c.boolean("topology", true);
  experiment.verdicts = c.boolean("bounds", true);
  experiment.tail_fraction = c.number("tail_fraction", 0.1);
  if (!(experiment.tail_fraction > 0.0 && experiment.tail_fraction <= 1.0))
    throw ConfigError(c.key("tail_fraction"), "must lie in (0, 1]");
  if (const json* node = c.find("times")) {
    if (!node->is_array()) throw ConfigError(c.key("times"), "expected an array of iterations");
    for (const json& t : *node) {
      if (!t.is_number_integer() || t.get<Iteration>() < 1) throw ConfigError(c.key("times"), "expected integers >= 1");
      experiment.times.push_back(t.get<Iteration>());
    }
  }
  c.finish();
  root.finish();

  if ((checks.displacement || checks.disagreement_bound || checks.iterate_relation_samples > 0) &&
      !problem.subgradient_bounds) {
    for (const Component& f : problem.problem.components()) {
      try {
        subgradient_bound(f, problem.problem.set());
      } catch (const std::domain_error&) {
        throw ConfigError("checks", "bound checks need C_i: declare problem.subgradient_bounds for an unbounded X");
      }
    }
  }
  if (checks.iterate_relation_samples > 0 && !problem.problem.set().bounded())
    throw ConfigError(c.key("iterate_relation_samples"), "sampling z from X needs a bounded X");

  RunConfig out{SimConfig{std::move(problem.problem), std::move(weights), std::move(noise), stepsize, horizon,
                          std::move(initial), seed, checks, record, std::move(problem.subgradient_bounds)},
                output, std::move(experiment), document};
  return out;
}

std::string config_digest(const nlohmann::json& document) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : document.dump()) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

}  // namespace netopt
