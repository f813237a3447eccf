#include "netopt/problem.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
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

void require_dimension(const Eigen::Ref<const Vector>& x, Index n) {
  if (x.size() != n)
    throw std::invalid_argument("vector has dimension " + std::to_string(x.size()) + ", expected " +
                                std::to_string(n));
}

// Euclidean projection onto {x >= 0, sum x = 1} by sorting.
void project_simplex(Eigen::Ref<Vector> x) {
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    cumulative += sorted[r];
    const double t = (cumulative - 1.0) / static_cast<double>(r + 1);
    if (sorted[r] - t > 0.0) threshold = t;
  }
  x = (x.array() - threshold).max(0.0).matrix();
}

double gaussian(CounterRng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace

ConvexSet ConvexSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw std::invalid_argument("box bounds must be nonempty and of equal dimension");
  if ((lower.array() > upper.array()).any()) throw std::invalid_argument("box requires lower <= upper");
  if (!lower.allFinite() || !upper.allFinite()) throw std::invalid_argument("box bounds must be finite");
  return ConvexSet(Box{std::move(lower), std::move(upper)});
}

ConvexSet ConvexSet::ball(Vector center, double radius) {
  if (center.size() == 0) throw std::invalid_argument("ball center must be nonempty");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("ball radius must be > 0");
  return ConvexSet(Ball{std::move(center), radius});
}

ConvexSet ConvexSet::simplex(Index dimension) {
  if (dimension < 1) throw std::invalid_argument("simplex dimension must be >= 1");
  return ConvexSet(Simplex{dimension});
}

ConvexSet ConvexSet::halfspace(Vector normal, double offset) {
  if (normal.size() == 0 || normal.norm() == 0.0)
    throw std::invalid_argument("halfspace normal must be nonzero");
  return ConvexSet(Halfspace{std::move(normal), offset});
}

ConvexSet ConvexSet::whole_space(Index dimension) {
  if (dimension < 1) throw std::invalid_argument("dimension must be >= 1");
  return ConvexSet(WholeSpace{dimension});
}

Index ConvexSet::dimension() const {
  return std::visit(overloaded{[](const Box& b) { return b.lower.size(); },
                               [](const Ball& b) { return b.center.size(); },
                               [](const Simplex& s) { return s.dimension; },
                               [](const Halfspace& h) { return h.normal.size(); },
                               [](const WholeSpace& w) { return w.dimension; }},
                    set_);
}

void ConvexSet::project_in_place(Eigen::Ref<Vector> x) const {
  require_dimension(x, dimension());
  std::visit(overloaded{[&](const Box& b) { x = x.cwiseMax(b.lower).cwiseMin(b.upper); },
                        [&](const Ball& b) {
                          const double dist = (x - b.center).norm();
                          if (dist > b.radius) x = b.center + (b.radius / dist) * (x - b.center);
                        },
                        [&](const Simplex&) { project_simplex(x); },
                        [&](const Halfspace& h) {
                          const double excess = h.normal.dot(x) - h.offset;
                          if (excess > 0.0) x -= (excess / h.normal.squaredNorm()) * h.normal;
                        },
                        [](const WholeSpace&) {}},
             set_);
}

Vector ConvexSet::project(const Vector& x) const {
  Vector out = x;
  project_in_place(out);
  return out;
}

bool ConvexSet::contains(const Vector& x, double tolerance) const {
  if (x.size() != dimension() || !x.allFinite()) return false;
  return std::visit(
      overloaded{[&](const Box& b) {
                   return ((x - b.lower).array() >= -tolerance).all() &&
                          ((b.upper - x).array() >= -tolerance).all();
                 },
                 [&](const Ball& b) { return (x - b.center).norm() <= b.radius + tolerance; },
                 [&](const Simplex&) {
                   return (x.array() >= -tolerance).all() && std::abs(x.sum() - 1.0) <= tolerance;
                 },
                 [&](const Halfspace& h) { return h.normal.dot(x) <= h.offset + tolerance; },
                 [](const WholeSpace&) { return true; }},
      set_);
}

bool ConvexSet::bounded() const {
  return !std::holds_alternative<Halfspace>(set_) && !std::holds_alternative<WholeSpace>(set_);
}

double ConvexSet::diameter() const {
  return std::visit(overloaded{[](const Box& b) { return (b.upper - b.lower).norm(); },
                               [](const Ball& b) { return 2.0 * b.radius; },
                               [](const Simplex& s) { return s.dimension > 1 ? std::sqrt(2.0) : 0.0; },
                               [](const Halfspace&) { return std::numeric_limits<double>::infinity(); },
                               [](const WholeSpace&) { return std::numeric_limits<double>::infinity(); }},
                    set_);
}

std::pair<Vector, Vector> ConvexSet::bounding_box() const {
  return std::visit(
      overloaded{[](const Box& b) { return std::make_pair(b.lower, b.upper); },
                 [](const Ball& b) {
                   return std::make_pair(Vector((b.center.array() - b.radius).matrix()),
                                         Vector((b.center.array() + b.radius).matrix()));
                 },
                 [](const Simplex& s) {
                   return std::make_pair(Vector(Vector::Zero(s.dimension)), Vector(Vector::Ones(s.dimension)));
                 },
                 [](const auto&) -> std::pair<Vector, Vector> {
                   throw std::domain_error("unbounded set has no bounding box");
                 }},
      set_);
}

Vector ConvexSet::sample(CounterRng& rng) const {
  return std::visit(
      overloaded{[&](const Box& b) {
                   Vector x(b.lower.size());
                   for (Index d = 0; d < x.size(); ++d)
                     x(d) = b.lower(d) + (b.upper(d) - b.lower(d)) * rng.uniform();
                   return x;
                 },
                 [&](const Ball& b) {
                   const Index n = b.center.size();
                   Vector dir(n);
                   do {
                     for (Index d = 0; d < n; ++d) dir(d) = gaussian(rng);
                   } while (dir.norm() == 0.0);
                   const double r = b.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
                   return Vector(b.center + (r / dir.norm()) * dir);
                 },
                 [&](const Simplex& s) {
                   Vector x(s.dimension);
                   for (Index d = 0; d < s.dimension; ++d) x(d) = -std::log1p(-rng.uniform());
                   return Vector(x / x.sum());
                 },
                 [](const auto&) -> Vector { throw std::domain_error("cannot sample uniformly from an unbounded set"); }},
      set_);
}

std::string ConvexSet::name() const {
  return std::visit(overloaded{[](const Box&) { return "box"; }, [](const Ball&) { return "ball"; },
                               [](const Simplex&) { return "simplex"; },
                               [](const Halfspace&) { return "halfspace"; },
                               [](const WholeSpace&) { return "whole"; }},
                    set_);
}

Component::Component(Variant f) : f_(std::move(f)) {
  std::visit(overloaded{[](const Quadratic& q) {
                          if (q.center.size() == 0) throw std::invalid_argument("quadratic center is empty");
                        },
                        [](const WeightedQuadratic& q) {
                          if (q.center.size() == 0 || q.center.size() != q.weights.size())
                            throw std::invalid_argument("weighted quadratic needs center and weights of equal size");
                          if ((q.weights.array() < 0.0).any())
                            throw std::invalid_argument("weighted quadratic needs nonnegative weights");
                        },
                        [](const AbsoluteDeviation& a) {
                          if (a.center.size() == 0) throw std::invalid_argument("absolute deviation center is empty");
                        },
                        [](const Hinge& h) {
                          if (h.normal.size() == 0) throw std::invalid_argument("hinge normal is empty");
                        }},
             f_);
}

Index Component::dimension() const {
  return std::visit(overloaded{[](const Quadratic& q) { return q.center.size(); },
                               [](const WeightedQuadratic& q) { return q.center.size(); },
                               [](const AbsoluteDeviation& a) { return a.center.size(); },
                               [](const Hinge& h) { return h.normal.size(); }},
                    f_);
}

std::string Component::kind() const {
  return std::visit(overloaded{[](const Quadratic&) { return "quadratic"; },
                               [](const WeightedQuadratic&) { return "weighted_quadratic"; },
                               [](const AbsoluteDeviation&) { return "absolute_deviation"; },
                               [](const Hinge&) { return "hinge"; }},
                    f_);
}

double Component::value(const Eigen::Ref<const Vector>& x) const {
  return std::visit(
      overloaded{[&](const Quadratic& q) { return (x - q.center).squaredNorm(); },
                 [&](const WeightedQuadratic& q) {
                   return (q.weights.array() * (x - q.center).array().square()).sum();
                 },
                 [&](const AbsoluteDeviation& a) { return (x - a.center).lpNorm<1>(); },
                 [&](const Hinge& h) { return std::max(0.0, h.normal.dot(x) + h.offset); }},
      f_);
}

void Component::subgradient_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
  std::visit(overloaded{[&](const Quadratic& q) { out = 2.0 * (x - q.center); },
                        [&](const WeightedQuadratic& q) {
                          out = (2.0 * q.weights.array() * (x - q.center).array()).matrix();
                        },
                        [&](const AbsoluteDeviation& a) {
                          // sign(x_d - c_d), 0 at the kink
                          for (Index d = 0; d < x.size(); ++d) {
                            const double r = x(d) - a.center(d);
                            out(d) = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
                          }
                        },
                        [&](const Hinge& h) {
                          // subdifferential at the kink is [0, 1] * a; 0 has minimum norm
                          if (h.normal.dot(x) + h.offset > 0.0) out = h.normal;
                          else out.setZero();
                        }},
             f_);
}

Vector Component::subgradient(const Vector& x) const {
  require_dimension(x, dimension());
  Vector out(x.size());
  subgradient_into(x, out);
  return out;
}

namespace {

// max over vertices of X of ||scale .* (x - c)||, with `scale` >= 0. The
// function is convex in x, so the maximum over a polytope sits at a vertex.
double max_scaled_distance(const ConvexSet& set, const Vector& center, const Vector& scale) {
  return std::visit(
      overloaded{[&](const Box& b) {
                   const Vector lo = (scale.array() * (b.lower - center).array()).abs();
                   const Vector hi = (scale.array() * (b.upper - center).array()).abs();
                   return lo.cwiseMax(hi).norm();
                 },
                 [&](const Ball& b) {
                   // exact for uniform scale, an upper bound otherwise
                   return scale.maxCoeff() * ((b.center - center).norm() + b.radius);
                 },
                 [&](const Simplex& s) {
                   double best = 0.0;
                   for (Index v = 0; v < s.dimension; ++v) {
                     Vector diff = -center;
                     diff(v) += 1.0;
                     best = std::max(best, (scale.array() * diff.array()).matrix().norm());
                   }
                   return best;
                 },
                 [](const auto&) -> double { throw std::domain_error("no uniform bound"); }},
      set.variant());
}

}  // namespace

SubgradientBound subgradient_bound(const Component& f, const ConvexSet& set) {
  if (f.dimension() != set.dimension()) throw std::invalid_argument("component and set dimensions differ");
  return std::visit(
      overloaded{[&](const Quadratic& q) {
                   const Vector two = Vector::Constant(q.center.size(), 2.0);
                   return SubgradientBound{max_scaled_distance(set, q.center, two)};
                 },
                 [&](const WeightedQuadratic& q) {
                   return SubgradientBound{max_scaled_distance(set, q.center, Vector(2.0 * q.weights))};
                 },
                 [&](const AbsoluteDeviation& a) {
                   return SubgradientBound{std::sqrt(static_cast<double>(a.center.size()))};
                 },
                 [&](const Hinge& h) { return SubgradientBound{h.normal.norm()}; }},
      f.variant());
}

SubgradientBound sampled_subgradient_bound(const Component& f, const ConvexSet& set, int samples,
                                           std::uint64_t seed, double safety) {
  if (!set.bounded()) throw std::domain_error("no uniform bound");
  double best = 0.0;
  CounterRng rng(seed, StreamTag::kSampling);
  for (int s = 0; s < samples; ++s) best = std::max(best, f.subgradient(set.sample(rng)).norm());
  if (const auto* b = std::get_if<Box>(&set.variant()); b && b->lower.size() <= 16) {
    const Index n = b->lower.size();
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
      Vector corner(n);
      for (Index d = 0; d < n; ++d) corner(d) = (mask >> d) & 1ULL ? b->upper(d) : b->lower(d);
      best = std::max(best, f.subgradient(corner).norm());
    }
  }
  return {best * safety, true};
}

Problem::Problem(std::vector<Component> components, ConvexSet set, std::optional<Optimum> optimum)
    : components_(std::move(components)), set_(std::move(set)), optimum_(std::move(optimum)) {
  if (components_.empty()) throw std::invalid_argument("problem needs at least one component");
  for (const Component& c : components_)
    if (c.dimension() != set_.dimension())
      throw std::invalid_argument("component dimension differs from the constraint set");
  if (optimum_) {
    if (!set_.contains(optimum_->point, 1e-9))
      throw std::invalid_argument("declared optimum point lies outside X");
    const double f = value(optimum_->point);
    if (std::abs(f - optimum_->value) > 1e-9 * std::max(1.0, std::abs(f)))
      throw std::invalid_argument("declared optimum value " + std::to_string(optimum_->value) +
                                  " differs from f(x*) = " + std::to_string(f));
  }
}

double Problem::value(const Eigen::Ref<const Vector>& x) const {
  double total = 0.0;
  for (const Component& c : components_) total += c.value(x);
  return total;
}

Optimum solve_reference(const Problem& problem, double tolerance) {
  const ConvexSet& set = problem.set();
  if (!set.bounded()) throw std::domain_error("solve_reference needs a bounded constraint set");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const Index n = problem.dimension();
  if (n > 4) throw std::invalid_argument("solve_reference is limited to dimension <= 4");
  const int points = n <= 2 ? 41 : (n == 3 ? 21 : 11);

  auto [outer_lo, outer_hi] = set.bounding_box();
  Vector lo = outer_lo;
  Vector hi = outer_hi;
  Vector best_raw = (lo + hi) / 2.0;
  Vector best_point = set.project(best_raw);
  double best_value = problem.value(best_point);

  Vector raw(n);
  Vector candidate(n);
  std::vector<int> digits(static_cast<std::size_t>(n));
  for (int round = 0; round < 200; ++round) {
    const Vector step = (hi - lo) / static_cast<double>(points - 1);
    std::fill(digits.begin(), digits.end(), 0);
    for (bool more = true; more;) {
      for (Index d = 0; d < n; ++d) raw(d) = lo(d) + step(d) * digits[static_cast<std::size_t>(d)];
      candidate = raw;
      set.project_in_place(candidate);
      const double f = problem.value(candidate);
      if (f < best_value) {
        best_value = f;
        best_point = candidate;
        best_raw = raw;
      }
      more = false;
      for (std::size_t d = 0; d < digits.size(); ++d) {
        if (++digits[d] < points) {
          more = true;
          break;
        }
        digits[d] = 0;
      }
    }
    if (step.maxCoeff() < tolerance) break;
    lo = (best_raw - 2.0 * step).cwiseMax(outer_lo);
    hi = (best_raw + 2.0 * step).cwiseMin(outer_hi);
  }
  return {best_value, best_point};
}

}  // namespace netopt
