#include "netopt/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace netopt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_per_agent(const std::vector<double>& values, std::size_t agents, const char* what) {
  if (values.size() != agents)
    throw std::invalid_argument(std::string(what) + " needs one value per agent");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be >= 0");
}

void fill_gaussian(CounterRng& rng, double sigma, Eigen::Ref<Vector> out) {
  if (sigma == 0.0) {
    out.setZero();
    return;
  }
  std::normal_distribution<double> normal(0.0, sigma);
  for (Index d = 0; d < out.size(); ++d) out(d) = normal(rng);
}

}  // namespace

Vector BiasSchedule::at(AgentId i, Iteration k) const {
  const Vector& b = bias.at(i);
  if (decay == 0.0) return b;
  return b / std::pow(static_cast<double>(k), decay);
}

NoiseModel::NoiseModel(Variant model, std::size_t agents, Index dimension, std::uint64_t seed)
    : model_(std::move(model)), agents_(agents), dimension_(dimension), seed_(seed) {
  if (agents == 0 || dimension < 1) throw std::invalid_argument("noise model needs agents and dimension");
  std::visit(overloaded{[](const NoNoise&) {},
                        [&](const GaussianNoise& g) { check_per_agent(g.sigma, agents, "noise.sigma"); },
                        [&](const UniformBallNoise& u) { check_per_agent(u.radius, agents, "noise.radius"); },
                        [&](const BiasedNoise& b) {
                          check_per_agent(b.sigma, agents, "noise.sigma");
                          if (b.bias.bias.size() != agents)
                            throw std::invalid_argument("noise.bias needs one vector per agent");
                          for (const Vector& v : b.bias.bias)
                            if (v.size() != dimension) throw std::invalid_argument("noise.bias dimension mismatch");
                          if (!(b.bias.decay >= 0.0)) throw std::invalid_argument("noise.decay must be >= 0");
                        }},
             model_);
}

void NoiseModel::sample_into(std::uint64_t seed, AgentId agent, Iteration k, Eigen::Ref<Vector> out) const {
  std::visit(overloaded{[&](const NoNoise&) { out.setZero(); },
                        [&](const GaussianNoise& g) {
                          CounterRng rng(seed, StreamTag::kNoise, agent, static_cast<std::uint64_t>(k));
                          fill_gaussian(rng, g.sigma[agent], out);
                        },
                        [&](const UniformBallNoise& u) {
                          const double radius = u.radius[agent];
                          if (radius == 0.0) {
                            out.setZero();
                            return;
                          }
                          CounterRng rng(seed, StreamTag::kNoise, agent, static_cast<std::uint64_t>(k));
                          do {
                            fill_gaussian(rng, 1.0, out);
                          } while (out.squaredNorm() == 0.0);
                          const double r =
                              radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(out.size()));
                          out *= r / out.norm();
                        },
                        [&](const BiasedNoise& b) {
                          CounterRng rng(seed, StreamTag::kNoise, agent, static_cast<std::uint64_t>(k));
                          fill_gaussian(rng, b.sigma[agent], out);
                          out += b.bias.at(agent, k);
                        }},
             model_);
}

Vector NoiseModel::sample(AgentId agent, Iteration k) const {
  Vector out(dimension_);
  sample_into(seed_, agent, k, out);
  return out;
}

double NoiseModel::rms_bound(AgentId agent) const {
  const double n = static_cast<double>(dimension_);
  return std::visit(overloaded{[](const NoNoise&) { return 0.0; },
                               [&](const GaussianNoise& g) { return g.sigma.at(agent) * std::sqrt(n); },
                               [&](const UniformBallNoise& u) { return u.radius.at(agent); },
                               [&](const BiasedNoise& b) {
                                 // the bias magnitude is largest at k = 1
                                 const double s = b.sigma.at(agent);
                                 return std::sqrt(b.bias.bias.at(agent).squaredNorm() + n * s * s);
                               }},
                    model_);
}

double NoiseModel::mean_bound(AgentId agent) const {
  if (const auto* b = std::get_if<BiasedNoise>(&model_))
    return b->bias.decay == 0.0 ? b->bias.bias.at(agent).norm() : 0.0;
  return 0.0;
}

Vector NoiseModel::mean(AgentId agent, Iteration k) const {
  if (const auto* b = std::get_if<BiasedNoise>(&model_)) return b->bias.at(agent, k);
  return Vector::Zero(dimension_);
}

bool NoiseModel::zero_mean() const {
  const auto* b = std::get_if<BiasedNoise>(&model_);
  if (!b) return true;
  return std::all_of(b->bias.bias.begin(), b->bias.bias.end(), [](const Vector& v) { return v.isZero(0.0); });
}

bool NoiseModel::is_zero() const {
  for (AgentId i = 0; i < agents_; ++i)
    if (rms_bound(i) > 0.0) return false;
  return true;
}

Vector sample_error(const NoiseModel& model, AgentId agent, Iteration k, const Vector& /*x*/) {
  return model.sample(agent, k);
}

StepsizeSchedule StepsizeSchedule::constant(double a) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("constant stepsize must be >= 0");
  return {StepsizeKind::kConstant, a, 0.0, 0.0};
}

StepsizeSchedule StepsizeSchedule::harmonic(double a, double b) {
  if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("stepsize scale must be > 0");
  if (!(b > -1.0)) throw std::invalid_argument("stepsize offset must exceed -1");
  return {StepsizeKind::kHarmonic, a, b, 1.0};
}

StepsizeSchedule StepsizeSchedule::power(double a, double b, double p) {
  if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("stepsize scale must be > 0");
  if (!(b > -1.0)) throw std::invalid_argument("stepsize offset must exceed -1");
  if (!(p > 0.5 && p <= 1.0)) throw std::invalid_argument("stepsize exponent must lie in (0.5, 1]");
  return {StepsizeKind::kPower, a, b, p};
}

double StepsizeSchedule::at(Iteration k) const {
  if (k < 1) throw std::invalid_argument("stepsizes are indexed from k = 1");
  const double x = static_cast<double>(k) + b_;
  switch (kind_) {
    case StepsizeKind::kConstant: return a_;
    case StepsizeKind::kHarmonic: return a_ / x;
    case StepsizeKind::kPower: return a_ / std::pow(x, p_);
  }
  return a_;
}

Vector RobbinsMonro::subgradient(const Vector& x, Iteration k) const {
  CounterRng rng(seed_, StreamTag::kEstimator, agent_, static_cast<std::uint64_t>(k));
  return gradient_(x, sampler_(rng));
}

double Spacing::at(Iteration k) const {
  if (k < 1) throw std::invalid_argument("spacing is indexed from k = 1");
  return initial / std::pow(static_cast<double>(k), exponent);
}

KieferWolfowitz::KieferWolfowitz(ValueSample value, ParamSampler sampler, Spacing spacing,
                                 std::uint64_t seed, AgentId agent)
    : value_(std::move(value)), sampler_(std::move(sampler)), spacing_(spacing), seed_(seed), agent_(agent) {}

double KieferWolfowitz::subgradient(double x, Iteration k) const {
  const double beta = spacing_.at(k);
  if (!(beta > 0.0)) throw std::invalid_argument("Kiefer-Wolfowitz spacing must be > 0");
  CounterRng shifted(seed_, StreamTag::kEstimator, agent_, static_cast<std::uint64_t>(k), 1);
  CounterRng base(seed_, StreamTag::kEstimator, agent_, static_cast<std::uint64_t>(k), 2);
  const double upper = value_(x, sampler_(x + beta, shifted));
  const double lower = value_(x, sampler_(x, base));
  return (upper - lower) / beta;
}

Vector rm_subgradient(const SaEstimator& estimator, const Vector& x, Iteration k) {
  const auto* rm = std::get_if<RobbinsMonro>(&estimator);
  if (!rm) throw std::invalid_argument("estimator is not Robbins-Monro");
  return rm->subgradient(x, k);
}

double kw_subgradient(const SaEstimator& estimator, double x, Iteration k) {
  const auto* kw = std::get_if<KieferWolfowitz>(&estimator);
  if (!kw) throw std::invalid_argument("estimator is not Kiefer-Wolfowitz");
  return kw->subgradient(x, k);
}

ConvolutionReport convolution_limit_check(std::span<const double> gammas, double beta,
                                          std::optional<double> declared_limit) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("convolution check needs 0 < beta < 1");
  ConvolutionReport report;
  report.partial.reserve(gammas.size());
  double s = 0.0;
  double total = 0.0;
  for (double g : gammas) {
    s = beta * s + g;  // s_k = β s_{k-1} + γ_k
    report.partial.push_back(s);
    report.cumulative += s;
    total += g;
  }
  report.final_value = gammas.empty() ? 0.0 : s;
  report.cumulative_bound = total / (1.0 - beta);
  if (declared_limit) report.predicted_limit = *declared_limit / (1.0 - beta);
  return report;
}

WeightedAverageReport weighted_average_limit_check(std::span<const double> gammas,
                                                   std::span<const double> zetas) {
  if (gammas.size() != zetas.size()) throw std::invalid_argument("gamma and zeta lengths differ");
  if (gammas.empty()) throw std::invalid_argument("weighted average check needs a nonempty sequence");
  WeightedAverageReport report;
  report.ratios.reserve(gammas.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    if (!(zetas[k] > 0.0)) throw std::invalid_argument("weights zeta_k must be positive");
    num += gammas[k] * zetas[k];
    den += zetas[k];
    report.ratios.push_back(num / den);
  }
  report.final_ratio = report.ratios.back();
  const std::size_t half = gammas.size() / 2;
  report.limsup_estimate = *std::max_element(gammas.begin() + static_cast<std::ptrdiff_t>(half), gammas.end());
  return report;
}

}  // namespace netopt
