#include <doctest.h>

#include <cmath>

#include "netopt/bounds.hpp"

using namespace netopt;
using doctest::Approx;

namespace {

BoundInputs inputs(std::size_t m, double eta, double alpha, double c, double nu = 0.0, double mu = 0.0) {
  const RateCertificate cert = rate_certificate(m, eta, 1);
  BoundInputs in;
  in.agents = m;
  in.theta = cert.theta;
  in.beta = cert.beta;
  in.eta = eta;
  in.c.assign(m, c);
  in.nu.assign(m, nu);
  in.mu.assign(m, mu);
  in.alpha = alpha;
  return in;
}

}  // namespace

TEST_SUITE("bounds") {
  TEST_CASE("disagreement bound") {
    const BoundInputs in = inputs(2, 0.5, 0.1, 1.0);
    CHECK(in.theta == Approx(1.0 / (0.96875 * 0.96875)).epsilon(1e-12));
    CHECK(disagreement_bound(in) == Approx(6.806).epsilon(1e-4));
    CHECK(disagreement_bound(inputs(2, 0.5, 0.0, 1.0)) == 0.0);
  }

  TEST_CASE("function value bound") {
    BoundInputs in = inputs(3, 1.0 / 3, 0.01, 6.0);
    in.diameter = 2.0;
    CHECK(in.beta == Approx(0.990741).epsilon(1e-6));
    CHECK(in.theta == Approx(1.018779).epsilon(1e-6));
    // 3 * 0.01 * 36 * (4.5 + 6 * 108 / 107 * 108) with θβ = 1/β = 108/107
    const double expected = 1.08 * (4.5 + 6.0 * (108.0 / 107.0) * 108.0);
    CHECK(function_value_bound(in) == Approx(expected).epsilon(1e-9));
    CHECK(function_value_bound(in) == Approx(711.24).epsilon(1e-4));
    CHECK(averaged_bound(in) == function_value_bound(in));

    BoundInputs biased = inputs(3, 1.0 / 3, 0.0, 6.0, 0.0, 0.1);
    biased.diameter = 2.0;
    CHECK(function_value_bound(biased) == Approx(0.6));
    CHECK(function_value_bound(inputs(3, 1.0 / 3, 0.0, 6.0)) == 0.0);

    BoundInputs unbounded = inputs(3, 1.0 / 3, 0.0, 6.0, 0.0, 0.1);
    CHECK_THROWS_AS(function_value_bound(unbounded), std::domain_error);
    // zero mean errors make D irrelevant
    CHECK(function_value_bound(inputs(3, 1.0 / 3, 0.01, 6.0)) == Approx(expected));
  }

  TEST_CASE("bounds are monotone") {
    double last = -1.0;
    for (double alpha : {0.0, 0.001, 0.01, 0.1}) {
      const double b = function_value_bound(inputs(4, 0.25, alpha, 1.0, 0.5));
      CHECK(b > last);
      last = b;
    }
    CHECK(disagreement_bound(inputs(4, 0.25, 0.1, 1.0, 1.0)) > disagreement_bound(inputs(4, 0.25, 0.1, 1.0)));
    CHECK(function_value_alpha_term(inputs(8, 0.25, 0.1, 1.0), 0.1) >
          function_value_alpha_term(inputs(4, 0.25, 0.1, 1.0), 0.1));
    BoundInputs wide = inputs(2, 0.5, 0.1, 1.0);
    wide.window = 3;
    const RateCertificate slow = rate_certificate(2, 0.5, 3);
    wide.theta = slow.theta;
    wide.beta = slow.beta;
    CHECK(disagreement_bound(wide) > disagreement_bound(inputs(2, 0.5, 0.1, 1.0)));
  }

  TEST_CASE("finite time bound") {
    BoundInputs in = inputs(2, 0.5, 0.1, 1.0);
    in.initial_distance_sq = 3.0;
    BoundInputs at_optimum = in;
    at_optimum.initial_distance_sq = 0.0;
    CHECK(finite_time_bound(in, 100, 0.1) - finite_time_bound(at_optimum, 100, 0.1) == Approx(0.15));
    CHECK(finite_time_bound(at_optimum, 100, 0.1) == Approx(function_value_alpha_term(in, 0.1)));

    in.max_initial_norm = 1.0;
    CHECK(std::abs(finite_time_bound(in, 1'000'000'000'000, 0.1) - averaged_bound(in)) < 1e-9);
    CHECK(finite_time_bound(in, 10, 0.1) > finite_time_bound(in, 1000, 0.1));
    CHECK_THROWS(finite_time_bound(in, 0, 0.1));
  }

  TEST_CASE("run constants") {
    BoundInputs in = inputs(2, 0.5, 0.1, 1.0, 0.5);
    in.initial_distance_sq = 4.0;
    in.max_initial_norm = 2.0;
    const RunConstants k = run_constants(in);
    CHECK(k.a == Approx(2.0));
    const double b = in.beta;
    CHECK(k.b == Approx(2.0 * 4.0 * in.theta * b * b / (1.0 - b) * 1.0 * 2.0));
    CHECK(k.c == Approx(function_value_alpha_term(in, 1.0)));
    // t A/(tα) + B/t + αC reassembles the finite-time bound
    CHECK(finite_time_bound(in, 50, 0.2) == Approx(k.a / (50 * 0.2) + k.b / 50 + 0.2 * k.c));

    BoundInputs fast = in;
    fast.beta = 1e-12;
    fast.theta = 1.0;
    CHECK(run_constants(fast).b < 1e-20);
  }

  TEST_CASE("stopping rule") {
    const StoppingRule r = stopping_rule(1, 1, 1, 1);
    CHECK(r.psi == Approx(std::sqrt(2.0) - 1).epsilon(1e-9));
    CHECK(r.iterations == 6);
    CHECK(r.alpha == Approx(0.414214).epsilon(1e-6));

    const StoppingRule linear = stopping_rule(1, 0, 1, 0.2);
    CHECK(linear.psi == Approx(0.1));
    CHECK(linear.iterations == 100);
    CHECK(linear.alpha == Approx(0.1));

    const double ratio = stopping_rule(1, 1e6, 1, 4.0).psi / stopping_rule(1, 1e6, 1, 1.0).psi;
    CHECK(ratio == Approx(2.0).epsilon(2e-3));

    CHECK_THROWS(stopping_rule(1, 1, 1, 0));
    CHECK_THROWS(stopping_rule(1, 1, 0, 1));
  }

  TEST_CASE("the stopping rule meets its target") {
    for (double a : {0.1, 1.0, 5.0})
      for (double b : {0.0, 0.3, 100.0})
        for (double c : {0.5, 2.0})
          for (double eps : {0.01, 1.0}) {
            const StoppingRule r = stopping_rule(a, b, c, eps);
            const double n = static_cast<double>(r.iterations);
            CHECK(a / (n * r.alpha) + b / n + r.alpha * c <= eps * (1 + 1e-9));
          }
  }

  TEST_CASE("report layout") {
    BoundInputs in = inputs(2, 0.5, 0.1, 1.0);
    in.diameter = 2.0;
    const BoundReport report = evaluate_bounds(in, 8.0, {10, 100});
    CHECK(report.entry("disagreement").value == Approx(6.806).epsilon(1e-4));
    CHECK(report.entry("finite_time_t100").t == 100);
    CHECK(report.entry("averaged").kind == BoundKind::kLimsup);
    CHECK(report.entry("function_value").kind == BoundKind::kLiminf);
    CHECK(report.passed());
    const nlohmann::json j = report;
    CHECK(j.contains("bounds"));

    BoundInputs diminishing = in;
    diminishing.alpha = 0.0;
    CHECK(evaluate_bounds(diminishing, 8.0, {10}).flags.size() == 1);
  }

  TEST_CASE("verdicts from synthetic aggregates") {
    BoundInputs in = inputs(2, 0.5, 0.0, 1.0);
    in.diameter = 1.0;
    AggregatedTrace agg;
    agg.agents = 2;
    agg.replicas = 30;
    agg.k = {1, 2, 3, 4};
    agg.alpha = {0, 0, 0, 0};
    agg.network_value = {{1, 1, 1, 1}, {0, 0, 0, 0}};
    for (MetricStats* s : {&agg.disagreement, &agg.iterate_value, &agg.average_value, &agg.step_norm}) {
      s->mean.assign(8, 0.0);
      s->se.assign(8, 0.0);
    }
    agg.iterate_value.mean.assign(8, 1.0);
    agg.tail_disagreement.assign(60, 0.0);
    agg.tail_average_value.assign(60, 1.0);

    BoundReport ok = evaluate_bounds(in, 1.0);
    bound_vs_empirical(ok, agg);
    CHECK(*ok.entry("disagreement").pass);
    CHECK(*ok.entry("function_value").pass);
    CHECK(ok.passed());

    agg.tail_disagreement.assign(60, 0.5);
    BoundReport bad = evaluate_bounds(in, 1.0);
    bound_vs_empirical(bad, agg);
    CHECK_FALSE(*bad.entry("disagreement").pass);
    CHECK(*bad.entry("disagreement").margin == Approx(-0.5));
    CHECK_FALSE(bad.passed());

    BoundReport unknown = evaluate_bounds(in, std::nullopt);
    bound_vs_empirical(unknown, agg);
    CHECK_FALSE(unknown.entry("function_value").pass.has_value());
  }

  TEST_CASE("mis-declared noise is detected") {
    // Two agents with |x| costs and heavy noise; the declared bound omits the noise.
    const Vector zero = Vector::Zero(1);
    SimConfig cfg{Problem({AbsoluteDeviation{zero}, AbsoluteDeviation{zero}},
                          ConvexSet::box(Vector::Constant(1, -1e4), Vector::Constant(1, 1e4))),
                  WeightSchedule::metropolis(TopologySchedule::fixed(EdgeSet::complete(2))),
                  NoiseModel(GaussianNoise{{1000.0, 1000.0}}, 2, 1, 3),
                  StepsizeSchedule::constant(0.01),
                  2000,
                  Matrix::Zero(1, 2),
                  5};
    const Simulator sim(cfg);
    const AggregatedTrace agg = monte_carlo(cfg, 30);

    BoundInputs honest = bound_inputs(sim);
    BoundReport good = evaluate_bounds(honest, 0.0);
    bound_vs_empirical(good, agg);
    CHECK(*good.entry("disagreement").pass);

    BoundInputs lying = honest;
    lying.nu.assign(2, 0.0);
    BoundReport bad = evaluate_bounds(lying, 0.0);
    bound_vs_empirical(bad, agg);
    CHECK_FALSE(*bad.entry("disagreement").pass);
  }
}
