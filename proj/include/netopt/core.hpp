// Shared numeric types, error types and keyed random streams.
#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace netopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Iteration counter. Iterates are indexed from k = 0; A(k) and E_k from k = 1.
using Iteration = std::int64_t;

/// Raised when a weight matrix, schedule or run violates a standing assumption
/// (connectivity, stochasticity, feasibility).
class AssumptionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN or infinite iterate encountered during a run.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A runtime check (displacement, iterate relation, feasibility) failed under the abort policy.
class CheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration value; `key()` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Domain tags keep the streams of different subsystems disjoint.
enum class StreamTag : std::uint64_t {
  kNoise = 1,
  kTopology = 2,
  kInitial = 3,
  kEstimator = 4,
  kReplica = 5,
  kChecks = 6,
  kSampling = 7,
};

/// Hash a root seed and a tuple of keys into a substream seed. Streams for
/// distinct key tuples are independent for practical purposes, and adding
/// agents or iterations never perturbs existing streams.
constexpr std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0,
                                    std::uint64_t b = 0, std::uint64_t c = 0) noexcept {
  std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(tag)));
  h = mix64(h ^ mix64(a + 0x1234567ULL));
  h = mix64(h ^ mix64(b + 0x89ABCDEFULL));
  h = mix64(h ^ mix64(c + 0x13579BDFULL));
  return h;
}

/// SplitMix64 generator; satisfies UniformRandomBitGenerator so it plugs into
/// the <random> distributions. Cheap to construct, which is what makes one
/// generator per (agent, iteration) affordable.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t state) noexcept : state_(state) {}
  CounterRng(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0,
             std::uint64_t c = 0) noexcept
      : state_(derive_seed(seed, tag, a, b, c)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace netopt
