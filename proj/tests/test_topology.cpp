#include <doctest.h>

#include "netopt/topology.hpp"

using namespace netopt;

namespace {

TopologySchedule alternating() {
  const Edge odd[] = {{0, 1}};
  const Edge even[] = {{1, 2}};
  return TopologySchedule::periodic({EdgeSet::undirected(3, odd), EdgeSet::undirected(3, even)}, 2);
}

}  // namespace

TEST_SUITE("topology") {
  TEST_CASE("neighbors include the agent itself") {
    const auto complete = TopologySchedule::fixed(EdgeSet::complete(3));
    CHECK(complete.neighbors(4, 0) == std::vector<AgentId>{0, 1, 2});

    const auto empty = TopologySchedule::fixed(EdgeSet(3), 1, Validation::kSkip);
    CHECK(empty.neighbors(5, 2) == std::vector<AgentId>{2});

    const Edge odd[] = {{0, 1}};
    const Edge even[] = {{1, 2}};
    const auto directed = TopologySchedule::periodic({EdgeSet(3, odd), EdgeSet(3, even)}, 2, Validation::kSkip);
    CHECK(directed.neighbors(1, 1) == std::vector<AgentId>{0, 1});
    CHECK(directed.neighbors(2, 1) == std::vector<AgentId>{1});
  }

  TEST_CASE("Q-window connectivity") {
    const auto complete = TopologySchedule::fixed(EdgeSet::complete(3));
    CHECK(is_q_connected(complete, 0, 1));
    CHECK(is_q_connected(complete, 17, 1));

    const auto loops = TopologySchedule::fixed(EdgeSet(2), 10, Validation::kSkip);
    CHECK_FALSE(is_q_connected(loops, 0, 10));

    const auto alt = alternating();
    CHECK(is_q_connected(alt, 0, 2));
    CHECK_FALSE(is_q_connected(alt, 0, 1));
    // the union only grows with the window
    for (int q = 2; q < 6; ++q) CHECK(is_q_connected(alt, 3, q));
  }

  TEST_CASE("a directed cycle is strongly connected, a directed path is not") {
    const Edge cycle[] = {{0, 1}, {1, 2}, {2, 0}};
    CHECK(strongly_connected(EdgeSet(3, cycle)));
    const Edge path[] = {{0, 1}, {1, 2}};
    CHECK_FALSE(strongly_connected(EdgeSet(3, path)));
    CHECK(strongly_connected(EdgeSet(1)));
  }

  TEST_CASE("verify_schedule lists every failing window") {
    CHECK(verify_schedule(TopologySchedule::fixed(EdgeSet::complete(4)), 100).empty());

    const auto loops = TopologySchedule::fixed(EdgeSet(3), 1, Validation::kSkip);
    CHECK(verify_schedule(loops, 3) == std::vector<Iteration>{0, 1, 2});

    const Edge odd[] = {{0, 1}};
    const Edge even[] = {{1, 2}};
    const auto alt1 = TopologySchedule::periodic({EdgeSet::undirected(3, odd), EdgeSet::undirected(3, even)}, 1,
                                                 Validation::kSkip);
    CHECK(verify_schedule(alt1, 4) == std::vector<Iteration>{0, 1, 2, 3});
    CHECK(verify_schedule(alternating(), 50).empty());
    CHECK_THROWS_AS(verify_schedule(alternating(), 1), std::invalid_argument);
  }

  TEST_CASE("deterministic schedules are validated at construction") {
    CHECK_THROWS_AS(TopologySchedule::fixed(EdgeSet(3)), AssumptionViolation);
    const Edge odd[] = {{0, 1}};
    const Edge even[] = {{1, 2}};
    CHECK_THROWS_AS(
        TopologySchedule::periodic({EdgeSet::undirected(3, odd), EdgeSet::undirected(3, even)}, 1),
        AssumptionViolation);
  }

  TEST_CASE("seeded random schedules are reproducible and keep self-loops") {
    const auto a = TopologySchedule::random(EdgeSet::complete(5), 0.4, 99, 3);
    const auto b = TopologySchedule::random(EdgeSet::complete(5), 0.4, 99, 3);
    const auto c = TopologySchedule::random(EdgeSet::complete(5), 0.4, 100, 3);
    bool differs = false;
    for (Iteration k = 1; k <= 50; ++k) {
      CHECK(a.edges(k) == b.edges(k));
      CHECK(a.edges(k).symmetric());
      differs = differs || !(a.edges(k) == c.edges(k));
      for (AgentId i = 0; i < 5; ++i) CHECK(a.edges(k).contains(i, i));
    }
    CHECK(differs);
  }

  TEST_CASE("named families") {
    CHECK(EdgeSet::ring(5).degree(0) == 2);
    CHECK(EdgeSet::path(4).degree(0) == 1);
    CHECK(EdgeSet::path(4).degree(1) == 2);
    CHECK(EdgeSet::star(5).degree(0) == 4);
    CHECK(EdgeSet::star(5).degree(3) == 1);
    CHECK(EdgeSet::complete(4).links().size() == 12);
    CHECK(EdgeSet::ring(2).degree(1) == 1);
  }

  TEST_CASE("edges are defined from k = 1") {
    CHECK_THROWS(TopologySchedule::fixed(EdgeSet::complete(2)).edges(0));
  }
}
