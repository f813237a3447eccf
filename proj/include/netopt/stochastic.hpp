// Subgradient error models, stepsize schedules, stochastic-approximation
// gradient estimators and checks on convolution-type scalar sequences.
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "netopt/core.hpp"
#include "netopt/topology.hpp"

namespace netopt {

struct NoNoise {};

/// Independent N(0, sigma_i^2 I) per agent.
struct GaussianNoise {
  std::vector<double> sigma;
};

/// Uniform over the ball of radius rho_i per agent.
struct UniformBallNoise {
  std::vector<double> radius;
};

/// b_{i,k} = bias_i / k^decay. decay = 0 keeps the bias constant.
struct BiasSchedule {
  std::vector<Vector> bias;
  double decay = 0.0;

  Vector at(AgentId i, Iteration k) const;
};

/// b_{i,k} plus a zero-mean Gaussian part with per-agent sigma.
struct BiasedNoise {
  BiasSchedule bias;
  std::vector<double> sigma;
};

/// Error model for ε_{i,k}. Draws are pure functions of (seed, agent, k).
class NoiseModel {
 public:
  using Variant = std::variant<NoNoise, GaussianNoise, UniformBallNoise, BiasedNoise>;

  NoiseModel(Variant model, std::size_t agents, Index dimension, std::uint64_t seed = 0);

  /// One draw of ε_{agent,k} from the stream keyed by `seed`.
  void sample_into(std::uint64_t seed, AgentId agent, Iteration k, Eigen::Ref<Vector> out) const;
  Vector sample(AgentId agent, Iteration k) const;

  /// Declared root-mean-square bound: E||ε_{i,k}||^2 <= rms_bound(i)^2 for all k.
  double rms_bound(AgentId agent) const;
  /// limsup_k ||E ε_{i,k}||.
  double mean_bound(AgentId agent) const;
  /// E ε_{i,k}.
  Vector mean(AgentId agent, Iteration k) const;
  bool zero_mean() const;
  bool is_zero() const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t agents() const noexcept { return agents_; }
  Index dimension() const noexcept { return dimension_; }
  const Variant& variant() const noexcept { return model_; }

 private:
  Variant model_;
  std::size_t agents_;
  Index dimension_;
  std::uint64_t seed_;
};

/// ε_{agent,k} drawn with the model's own seed. `x` is accepted for
/// state-dependent models; the built-in models ignore it.
Vector sample_error(const NoiseModel& model, AgentId agent, Iteration k, const Vector& x);

enum class StepsizeKind { kConstant, kHarmonic, kPower };

/// α_k for k >= 1: constant a; harmonic a / (k + b); power a / (k + b)^p.
class StepsizeSchedule {
 public:
  /// A constant of 0 is accepted and turns the run into pure consensus.
  static StepsizeSchedule constant(double a);
  static StepsizeSchedule harmonic(double a, double b = 0.0);
  static StepsizeSchedule power(double a, double b, double p);

  double at(Iteration k) const;

  StepsizeKind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double p() const noexcept { return p_; }
  /// lim α_k.
  double limit() const noexcept { return kind_ == StepsizeKind::kConstant ? a_ : 0.0; }
  /// Σ α_k = ∞.
  bool sums_diverge() const noexcept { return kind_ != StepsizeKind::kConstant || a_ > 0.0; }
  /// Σ α_k^2 < ∞.
  bool squares_summable() const noexcept { return kind_ != StepsizeKind::kConstant || a_ == 0.0; }

 private:
  StepsizeSchedule(StepsizeKind kind, double a, double b, double p) : kind_(kind), a_(a), b_(b), p_(p) {}

  StepsizeKind kind_;
  double a_;
  double b_;
  double p_;
};

/// Robbins-Monro estimator: returns ∇g(x, r) for a fresh sample r of R.
class RobbinsMonro {
 public:
  using GradientSample = std::function<Vector(const Vector& x, double r)>;
  using Sampler = std::function<double(CounterRng& rng)>;

  RobbinsMonro(GradientSample gradient, Sampler sampler, std::uint64_t seed, AgentId agent = 0)
      : gradient_(std::move(gradient)), sampler_(std::move(sampler)), seed_(seed), agent_(agent) {}

  /// Sample r_{k} from the stream (seed, agent, k) and return ∇g(x, r_k).
  Vector subgradient(const Vector& x, Iteration k) const;

 private:
  GradientSample gradient_;
  Sampler sampler_;
  std::uint64_t seed_;
  AgentId agent_;
};

/// Finite-difference spacing β_k = initial / k^exponent.
struct Spacing {
  double initial;
  double exponent = 0.25;

  double at(Iteration k) const;
};

/// Kiefer-Wolfowitz estimator for scalar x:
/// [g(x, r(x + β_k)) - g(x, r(x))] / β_k with r(y) an independent draw of R(y).
class KieferWolfowitz {
 public:
  using ValueSample = std::function<double(double x, double r)>;
  using ParamSampler = std::function<double(double y, CounterRng& rng)>;

  KieferWolfowitz(ValueSample value, ParamSampler sampler, Spacing spacing, std::uint64_t seed,
                  AgentId agent = 0);

  double subgradient(double x, Iteration k) const;
  double spacing(Iteration k) const { return spacing_.at(k); }

 private:
  ValueSample value_;
  ParamSampler sampler_;
  Spacing spacing_;
  std::uint64_t seed_;
  AgentId agent_;
};

using SaEstimator = std::variant<RobbinsMonro, KieferWolfowitz>;

Vector rm_subgradient(const SaEstimator& estimator, const Vector& x, Iteration k);
double kw_subgradient(const SaEstimator& estimator, double x, Iteration k);

struct ConvolutionReport {
  /// s_k = Σ_{l<=k} β^{k-l} γ_l for every k in the horizon.
  std::vector<double> partial;
  double final_value = 0.0;
  /// γ / (1 - β) when the limit γ of the sequence is declared.
  std::optional<double> predicted_limit;
  /// Σ_k s_k over the horizon and the bound Σ_l γ_l / (1 - β).
  double cumulative = 0.0;
  double cumulative_bound = 0.0;
};

ConvolutionReport convolution_limit_check(std::span<const double> gammas, double beta,
                                          std::optional<double> declared_limit = std::nullopt);

struct WeightedAverageReport {
  /// R_K = Σ_{k<=K} γ_k ζ_k / Σ_{k<=K} ζ_k.
  std::vector<double> ratios;
  double final_ratio = 0.0;
  /// sup of γ over the second half of the sequence.
  double limsup_estimate = 0.0;

  bool holds(double tolerance) const noexcept { return final_ratio <= limsup_estimate + tolerance; }
};

WeightedAverageReport weighted_average_limit_check(std::span<const double> gammas,
                                                   std::span<const double> zetas);

}  // namespace netopt
