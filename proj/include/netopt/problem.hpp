// Constraint sets with exact Euclidean projections, convex components with
// subgradient oracles, and the summed problem.
#pragma once

#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "netopt/core.hpp"

namespace netopt {

struct Box {
  Vector lower;
  Vector upper;
};
struct Ball {
  Vector center;
  double radius;
};
/// Probability simplex {x >= 0, sum x = 1} in `dimension` coordinates.
struct Simplex {
  Index dimension;
};
/// {x : normal . x <= offset}
struct Halfspace {
  Vector normal;
  double offset;
};
struct WholeSpace {
  Index dimension;
};

/// Closed convex set X.
class ConvexSet {
 public:
  using Variant = std::variant<Box, Ball, Simplex, Halfspace, WholeSpace>;

  static ConvexSet box(Vector lower, Vector upper);
  static ConvexSet ball(Vector center, double radius);
  static ConvexSet simplex(Index dimension);
  static ConvexSet halfspace(Vector normal, double offset);
  static ConvexSet whole_space(Index dimension);

  /// argmin over X of ||y - x||.
  Vector project(const Vector& x) const;
  /// In-place projection; `x` must have the set's dimension.
  void project_in_place(Eigen::Ref<Vector> x) const;
  bool contains(const Vector& x, double tolerance = 1e-12) const;

  Index dimension() const;
  bool bounded() const;
  /// max over x, y in X of ||x - y||; +inf for unbounded sets.
  double diameter() const;
  /// Axis-aligned box containing X; throws for unbounded sets.
  std::pair<Vector, Vector> bounding_box() const;
  /// Uniform draw from X; throws for unbounded sets.
  Vector sample(CounterRng& rng) const;

  const Variant& variant() const noexcept { return set_; }
  std::string name() const;

 private:
  explicit ConvexSet(Variant set) : set_(std::move(set)) {}
  Variant set_;
};

/// ||x - c||^2
struct Quadratic {
  Vector center;
};
/// sum_d w_d (x_d - c_d)^2 with w >= 0.
struct WeightedQuadratic {
  Vector center;
  Vector weights;
};
/// ||x - c||_1
struct AbsoluteDeviation {
  Vector center;
};
/// max(0, a . x + b)
struct Hinge {
  Vector normal;
  double offset;
};

/// Convex component f_i with value and subgradient oracles. At kinks the
/// subgradient is the minimum-norm element of the subdifferential.
class Component {
 public:
  using Variant = std::variant<Quadratic, WeightedQuadratic, AbsoluteDeviation, Hinge>;

  Component(Variant f);  // NOLINT: implicit
  /// Implicit from the concrete kinds.
  template <typename F>
    requires std::is_constructible_v<Variant, F&&> && (!std::is_same_v<std::remove_cvref_t<F>, Variant>) &&
             (!std::is_same_v<std::remove_cvref_t<F>, Component>)
  Component(F&& f) : Component(Variant(std::forward<F>(f))) {}  // NOLINT

  double value(const Eigen::Ref<const Vector>& x) const;
  Vector subgradient(const Vector& x) const;
  void subgradient_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const;
  Index dimension() const;
  std::string kind() const;
  const Variant& variant() const noexcept { return f_; }

 private:
  Variant f_;
};

struct SubgradientBound {
  double value;
  /// True when the value came from sampling rather than a closed form.
  bool approximate = false;
};

/// C with ||g|| <= C for every subgradient g at every x in X. Closed form for
/// the built-in components; throws std::domain_error("no uniform bound") when
/// the subgradients are unbounded over X.
SubgradientBound subgradient_bound(const Component& f, const ConvexSet& set);

/// Largest subgradient norm over `samples` uniform draws from X (plus the
/// vertices of a box), times `safety`. Flagged approximate.
SubgradientBound sampled_subgradient_bound(const Component& f, const ConvexSet& set, int samples,
                                           std::uint64_t seed, double safety = 1.1);

struct Optimum {
  double value;
  Vector point;
};

/// f = sum_i f_i over X. Component i belongs to agent i.
class Problem {
 public:
  Problem(std::vector<Component> components, ConvexSet set, std::optional<Optimum> optimum = std::nullopt);

  std::size_t agents() const noexcept { return components_.size(); }
  Index dimension() const noexcept { return set_.dimension(); }
  const Component& component(std::size_t i) const { return components_.at(i); }
  const std::vector<Component>& components() const noexcept { return components_; }
  const ConvexSet& set() const noexcept { return set_; }
  const std::optional<Optimum>& optimum() const noexcept { return optimum_; }

  double value(const Eigen::Ref<const Vector>& x) const;

 private:
  std::vector<Component> components_;
  ConvexSet set_;
  std::optional<Optimum> optimum_;
};

/// Brute-force reference optimum: grid search over the bounding box of X
/// (grid points projected onto X), zooming in until the grid spacing is
/// below `tolerance`. Intended for dimension <= 3. Rejects unbounded X.
Optimum solve_reference(const Problem& problem, double tolerance = 1e-6);

}  // namespace netopt
