#include <doctest.h>

#include <cmath>

#include "netopt/problem.hpp"

using namespace netopt;
using doctest::Approx;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector out(static_cast<Index>(values.size()));
  Index i = 0;
  for (double v : values) out(i++) = v;
  return out;
}

Problem three_agent_quadratic() {
  return Problem({Quadratic{vec({-2})}, Quadratic{vec({0})}, Quadratic{vec({2})}},
                 ConvexSet::box(vec({-1}), vec({1})));
}

std::vector<ConvexSet> sets2() {
  return {ConvexSet::box(vec({0, 0}), vec({1, 1})), ConvexSet::ball(vec({0.5, -0.5}), 1.5),
          ConvexSet::simplex(2), ConvexSet::halfspace(vec({1, 2}), 0.5), ConvexSet::whole_space(2)};
}

}  // namespace

TEST_SUITE("problem") {
  TEST_CASE("projection examples") {
    CHECK(ConvexSet::box(vec({0, 0}), vec({1, 1})).project(vec({2, -1})).isApprox(vec({1, 0})));
    CHECK(ConvexSet::ball(vec({0, 0}), 1.0).project(vec({3, 4})).isApprox(vec({0.6, 0.8})));
    const Vector s = ConvexSet::simplex(3).project(vec({0.5, 0.5, 0.5}));
    CHECK(s.isApprox(Vector::Constant(3, 1.0 / 3)));
    const Vector h = ConvexSet::halfspace(vec({1, 0}), 1.0).project(vec({3, 2}));
    CHECK(h.isApprox(vec({1, 2})));
    CHECK(ConvexSet::whole_space(2).project(vec({7, -7})).isApprox(vec({7, -7})));
  }

  TEST_CASE("simplex projection agrees with a brute-force KKT search") {
    // Independent oracle: bisection on the threshold tau of max(x - tau, 0).
    CounterRng rng(5, StreamTag::kSampling, 1);
    for (int trial = 0; trial < 50; ++trial) {
      Vector x(4);
      for (Index d = 0; d < 4; ++d) x(d) = 4.0 * rng.uniform() - 2.0;
      double lo = x.minCoeff() - 1.0;
      double hi = x.maxCoeff();
      for (int it = 0; it < 200; ++it) {
        const double tau = 0.5 * (lo + hi);
        ((x.array() - tau).max(0.0).sum() > 1.0 ? lo : hi) = tau;
      }
      const Vector expected = (x.array() - 0.5 * (lo + hi)).max(0.0).matrix();
      CHECK((ConvexSet::simplex(4).project(x) - expected).norm() < 1e-9);
    }
  }

  TEST_CASE("projection is idempotent, fixes members and is non-expansive") {
    CounterRng rng(11, StreamTag::kSampling, 2);
    auto draw = [&] { return vec({6.0 * rng.uniform() - 3.0, 6.0 * rng.uniform() - 3.0}); };
    for (const ConvexSet& set : sets2()) {
      for (int trial = 0; trial < 200; ++trial) {
        const Vector x = draw();
        const Vector y = draw();
        const Vector px = set.project(x);
        CHECK(set.contains(px, 1e-9));
        CHECK((set.project(px) - px).norm() < 1e-12);
        CHECK((set.project(y) - px).norm() <= (y - x).norm() + 1e-12);
        // variational inequality (x - Px).(z - Px) <= 0 for members z
        const Vector z = set.project(draw());
        CHECK((x - px).dot(z - px) <= 1e-9);
      }
    }
  }

  TEST_CASE("subgradient examples and tie-breaks") {
    const Component q = Quadratic{vec({1, 0})};
    CHECK(q.subgradient(vec({0, 0})).isApprox(vec({-2, 0})));
    const Component abs = AbsoluteDeviation{vec({0})};
    CHECK(abs.subgradient(vec({0}))(0) == 0.0);
    CHECK(abs.subgradient(vec({0.2}))(0) == 1.0);
    const Component hinge = Hinge{vec({1}), 0.0};
    CHECK(hinge.subgradient(vec({0}))(0) == 0.0);
    CHECK(hinge.subgradient(vec({0.5}))(0) == 1.0);
    CHECK(hinge.value(vec({0.5})) == Approx(0.5));
    const Component wq = WeightedQuadratic{vec({1, 1}), vec({2, 0})};
    CHECK(wq.value(vec({0, 0})) == Approx(2.0));
    CHECK(wq.subgradient(vec({0, 0})).isApprox(vec({-4, 0})));
  }

  TEST_CASE("subgradient inequality on sampled triples") {
    const std::vector<Component> components{Quadratic{vec({0.3, -0.2})}, WeightedQuadratic{vec({1, 0}), vec({0.5, 3})},
                                            AbsoluteDeviation{vec({0.1, 0.1})}, Hinge{vec({1, -1}), 0.2}};
    const ConvexSet box = ConvexSet::box(vec({-1, -1}), vec({1, 1}));
    CounterRng rng(3, StreamTag::kSampling, 3);
    for (const Component& f : components) {
      for (int trial = 0; trial < 500; ++trial) {
        const Vector x = box.sample(rng);
        const Vector y = box.sample(rng);
        CHECK(f.subgradient(x).dot(y - x) <= f.value(y) - f.value(x) + 1e-9);
      }
    }
  }

  TEST_CASE("closed-form subgradient bounds") {
    const ConvexSet interval = ConvexSet::box(vec({-1}), vec({1}));
    CHECK(subgradient_bound(Quadratic{vec({2})}, interval).value == Approx(6.0));
    CHECK_FALSE(subgradient_bound(Quadratic{vec({2})}, interval).approximate);
    CHECK(subgradient_bound(AbsoluteDeviation{vec({0})}, ConvexSet::whole_space(1)).value == Approx(1.0));
    const Vector c = vec({0.3, 0.4});
    CHECK(subgradient_bound(Quadratic{c}, ConvexSet::ball(vec({0, 0}), 2.0)).value == Approx(2.0 * (2.0 + 0.5)));
    CHECK_THROWS_AS(subgradient_bound(Quadratic{vec({0})}, ConvexSet::whole_space(1)), std::domain_error);
  }

  TEST_CASE("closed-form bounds dominate sampled subgradient norms") {
    const std::vector<Component> components{Quadratic{vec({3, -1})}, WeightedQuadratic{vec({1, 0}), vec({0.5, 3})},
                                            AbsoluteDeviation{vec({0.1, 0.1})}, Hinge{vec({1, -1}), 0.2}};
    CounterRng rng(4, StreamTag::kSampling, 4);
    for (const ConvexSet& set : sets2()) {
      if (!set.bounded()) continue;
      for (const Component& f : components) {
        const double c = subgradient_bound(f, set).value;
        for (int trial = 0; trial < 300; ++trial) CHECK(f.subgradient(set.sample(rng)).norm() <= c + 1e-9);
        const SubgradientBound sampled = sampled_subgradient_bound(f, set, 200, 9);
        CHECK(sampled.approximate);
        CHECK(sampled.value <= 1.1 * c + 1e-9);
      }
    }
  }

  TEST_CASE("diameters") {
    CHECK(ConvexSet::box(vec({0, 0}), vec({3, 4})).diameter() == Approx(5.0));
    CHECK(ConvexSet::ball(vec({1, 1}), 0.5).diameter() == Approx(1.0));
    CHECK(ConvexSet::simplex(3).diameter() == Approx(std::sqrt(2.0)));
    CHECK(std::isinf(ConvexSet::whole_space(2).diameter()));
  }

  TEST_CASE("uniform samples lie in the set") {
    CounterRng rng(8, StreamTag::kSampling, 8);
    for (const ConvexSet& set : sets2()) {
      if (!set.bounded()) {
        CHECK_THROWS(set.sample(rng));
        continue;
      }
      for (int t = 0; t < 200; ++t) CHECK(set.contains(set.sample(rng), 1e-12));
    }
  }

  TEST_CASE("reference solver") {
    const Optimum q = solve_reference(three_agent_quadratic());
    CHECK(q.value == Approx(8.0).epsilon(1e-9));
    CHECK(std::abs(q.point(0)) < 1e-5);

    const Problem abs({AbsoluteDeviation{vec({0.3})}}, ConvexSet::box(vec({0}), vec({1})));
    const Optimum a = solve_reference(abs);
    CHECK(a.value < 1e-6);
    CHECK(a.point(0) == Approx(0.3).epsilon(1e-5));

    const Problem two({Quadratic{vec({0, 0})}, Quadratic{vec({1, 1})}}, ConvexSet::box(vec({0, 0}), vec({1, 1})));
    const Optimum t = solve_reference(two);
    CHECK(t.value == Approx(1.0).epsilon(1e-9));
    CHECK((t.point - vec({0.5, 0.5})).norm() < 1e-5);

    CHECK_THROWS(solve_reference(Problem({Quadratic{vec({0})}}, ConvexSet::whole_space(1))));
  }

  TEST_CASE("problem validation") {
    CHECK(three_agent_quadratic().value(vec({0})) == Approx(8.0));
    CHECK_THROWS(Problem({Quadratic{vec({0, 0})}}, ConvexSet::box(vec({-1}), vec({1}))));
    CHECK_THROWS(Problem({Quadratic{vec({0})}}, ConvexSet::box(vec({-1}), vec({1})), Optimum{1.0, vec({0})}));
    CHECK_THROWS(Problem({Quadratic{vec({0})}}, ConvexSet::box(vec({-1}), vec({1})), Optimum{4.0, vec({2})}));
    CHECK_NOTHROW(Problem({Quadratic{vec({0})}}, ConvexSet::box(vec({-1}), vec({1})), Optimum{0.0, vec({0})}));
  }

  TEST_CASE("averaging and norm convexity properties") {
    CounterRng rng(21, StreamTag::kSampling, 5);
    auto draw = [&] { return vec({rng.uniform() * 4 - 2, rng.uniform() * 4 - 2, rng.uniform() * 4 - 2}); };
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Vector> v;
      Vector mean = Vector::Zero(3);
      for (int i = 0; i < 5; ++i) {
        v.push_back(draw());
        mean += v.back() / 5.0;
      }
      const Vector x = draw();
      double at_mean = 0.0, at_x = 0.0;
      for (const Vector& vi : v) {
        at_mean += (vi - mean).squaredNorm();
        at_x += (vi - x).squaredNorm();
      }
      CHECK(at_mean <= at_x + 1e-12);

      std::vector<double> w(5);
      double total = 0.0;
      for (double& wi : w) total += (wi = rng.uniform());
      Vector combo = Vector::Zero(3);
      double norms = 0.0, squares = 0.0;
      for (int i = 0; i < 5; ++i) {
        combo += (w[i] / total) * v[i];
        norms += (w[i] / total) * v[i].norm();
        squares += (w[i] / total) * v[i].squaredNorm();
      }
      CHECK(combo.norm() <= norms + 1e-12);
      CHECK(combo.squaredNorm() <= squares + 1e-12);
    }
  }
}
