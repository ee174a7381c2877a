#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "optran/oracle.hpp"
#include "optran/rng.hpp"
#include "optran/scenario.hpp"

using namespace optran;

namespace {

std::vector<Terminal> unit_terminals(const std::vector<Point>& positions) {
  std::vector<Terminal> out;
  const double m = 1.0 / static_cast<double>(positions.size());
  for (const Point& p : positions) out.push_back({p, m});
  return out;
}

std::vector<Point> random_points(Rng& rng, int n) {
  std::vector<Point> out;
  const ConvexPolygon domain = regular_polygon(64);
  while (static_cast<int>(out.size()) < n) {
    Point p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    if (point_in_polygon(p, domain, 0.0)) out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("identity assignment costs zero") {
  const std::vector<Point> pos{{0, 0}, {1, 0}};
  const std::vector<Terminal> terminals = unit_terminals(pos);
  const std::vector<double> caps{0.5, 0.5};
  const OracleResult r = exact_assignment(terminals, pos, caps, 2.0);
  CHECK(r.cost == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.integral);
  REQUIRE(r.plan.size() == 2);
  CHECK(r.plan[0].station == 0);
  CHECK(r.plan[1].station == 1);
}

TEST_CASE("station order does not matter, capacity can force a crossing") {
  SUBCASE("swapped station listing still finds the zero-cost matching") {
    const std::vector<Point> terms{{0, 0}, {1, 0}};
    const std::vector<Point> stations{{1, 0}, {0, 0}};
    const std::vector<Terminal> terminals = unit_terminals(terms);
    const std::vector<double> caps{0.5, 0.5};
    const OracleResult r = exact_assignment(terminals, stations, caps, 2.0);
    CHECK(r.cost == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(r.plan[0].station == 1);
    CHECK(r.plan[1].station == 0);
  }
  SUBCASE("full near station pushes one terminal across") {
    const std::vector<Point> terms{{0, 0}, {0, 0}};
    const std::vector<Point> stations{{0, 0}, {1, 0}};
    const std::vector<Terminal> terminals = unit_terminals(terms);
    const std::vector<double> caps{0.5, 0.5};
    const OracleResult r = exact_assignment(terminals, stations, caps, 2.0);
    CHECK(r.cost == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("non-integral masses are rejected") {
  const std::vector<Terminal> terminals{{{0, 0}, 0.5 + 1e-7}, {{1, 0}, 0.5 - 1e-7}};
  const std::vector<Point> stations{{0, 0}, {1, 0}};
  const std::vector<double> caps{0.5, 0.5};
  CHECK_THROWS_AS(exact_assignment(terminals, stations, caps, 2.0, 1000), OracleError);
}

TEST_CASE("supply/demand mismatch is rejected") {
  const std::vector<Terminal> terminals{{{0, 0}, 0.5}, {{1, 0}, 0.5}};
  const std::vector<Point> stations{{0, 0}, {1, 0}};
  const std::vector<double> caps{0.5, 0.25};
  CHECK_THROWS_AS(exact_assignment(terminals, stations, caps, 2.0), OracleError);
}

TEST_CASE("brute force basics") {
  SUBCASE("n=1, k=1") {
    const std::vector<Terminal> terminals{{{0.3, 0.2}, 1.0}};
    const std::vector<Point> stations{{0, 0}};
    const BruteForceResult r =
        brute_force_enumerate(terminals, stations, std::vector<double>{1.0}, 2.0);
    CHECK(r.assignment.owner[0] == 0);
    CHECK(r.cost == doctest::Approx(0.13).epsilon(1e-12));
  }
  SUBCASE("n=2, k=2 takes the cheaper permutation") {
    const std::vector<Point> pos{{0, 0}, {1, 0}};
    const std::vector<Terminal> terminals = unit_terminals(pos);
    const std::vector<Point> stations{{0.1, 0}, {0.9, 0}};
    const std::vector<double> caps{0.5, 0.5};
    const BruteForceResult r = brute_force_enumerate(terminals, stations, caps, 2.0);
    CHECK(r.assignment.owner[0] == 0);
    CHECK(r.assignment.owner[1] == 1);
    CHECK(r.cost == doctest::Approx(0.5 * 0.01 + 0.5 * 0.01).epsilon(1e-12));
  }
  SUBCASE("oversized instances are rejected") {
    Rng rng(555);
    const std::vector<Point> pos = random_points(rng, 40);
    const std::vector<Terminal> terminals = unit_terminals(pos);
    const std::vector<Point> stations = random_points(rng, 2);
    const std::vector<double> caps{0.5, 0.5};
    CHECK_THROWS_AS(brute_force_enumerate(terminals, stations, caps, 2.0), OracleError);
  }
}

TEST_CASE("flow oracle equals brute force on small instances") {
  Rng rng(90001);
  SUBCASE("n=8, k=2, caps (4,4)") {
    for (int trial = 0; trial < 8; ++trial) {
      const std::vector<Point> pos = random_points(rng, 8);
      const std::vector<Terminal> terminals = unit_terminals(pos);
      const std::vector<Point> stations = random_points(rng, 2);
      const std::vector<double> caps{0.5, 0.5};
      const BruteForceResult bf = brute_force_enumerate(terminals, stations, caps, 2.0);
      const OracleResult fl = exact_assignment(terminals, stations, caps, 2.0);
      CHECK(std::abs(fl.cost - bf.cost) <= 1e-12 * std::max(1.0, bf.cost));
    }
  }
  SUBCASE("n=6, k=3, caps (2,2,2)") {
    for (int trial = 0; trial < 8; ++trial) {
      const std::vector<Point> pos = random_points(rng, 6);
      const std::vector<Terminal> terminals = unit_terminals(pos);
      const std::vector<Point> stations = random_points(rng, 3);
      const std::vector<double> caps{1.0 / 3, 1.0 / 3, 1.0 / 3};
      const BruteForceResult bf = brute_force_enumerate(terminals, stations, caps, 2.0);
      // scale 999 divides sixth- and third-unit masses exactly
      const OracleResult fl = exact_assignment(terminals, stations, caps, 2.0, 999996);
      CHECK(std::abs(fl.cost - bf.cost) <= 1e-12 * std::max(1.0, bf.cost));
      CHECK(fl.integral);
    }
  }
  SUBCASE("alpha = 3 cost exponent") {
    for (int trial = 0; trial < 4; ++trial) {
      const std::vector<Point> pos = random_points(rng, 8);
      const std::vector<Terminal> terminals = unit_terminals(pos);
      const std::vector<Point> stations = random_points(rng, 2);
      const std::vector<double> caps{0.5, 0.5};
      const BruteForceResult bf = brute_force_enumerate(terminals, stations, caps, 3.0);
      const OracleResult fl = exact_assignment(terminals, stations, caps, 3.0);
      CHECK(std::abs(fl.cost - bf.cost) <= 1e-12 * std::max(1.0, bf.cost));
    }
  }
}

TEST_CASE("oracle optimum is a lower bound for the iterative solver") {
  for (int trial = 0; trial < 6; ++trial) {
    GenOptions gen;
    gen.n = 100;
    gen.k = 4;
    gen.seed = 7000 + static_cast<std::uint64_t>(trial);
    gen.solver.stop_dw = 1e-8;
    const LoadedScenario loaded = realize_scenario(generate_scenario(gen));
    std::vector<Terminal> terminals;
    for (const auto& t : loaded.scenario.terminals) terminals.push_back({t.position, t.mass});
    std::vector<Point> stations;
    std::vector<double> caps;
    for (const auto& s : loaded.scenario.stations) {
      stations.push_back(s.position);
      caps.push_back(s.cap);
    }
    const SolveResult solved =
        solve(terminals, stations, caps, loaded.scenario.domain, loaded.scenario.solver);
    const OracleResult oracle = exact_assignment(terminals, stations, caps, 2.0);
    CHECK(oracle.cost <= solved.assignment.cost + 1e-12);
  }
}

TEST_CASE("oracle potentials induce a supporting power diagram") {
  // At the optimum with alpha=2, heights h_j = potential_j make every
  // assigned terminal power-closest to its station.
  Rng rng(90003);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 40, k = 4;
    const std::vector<Point> pos = random_points(rng, n);
    const std::vector<Terminal> terminals = unit_terminals(pos);
    const std::vector<Point> stations = random_points(rng, k);
    const std::vector<double> caps(static_cast<size_t>(k), 0.25);
    const OracleResult r = exact_assignment(terminals, stations, caps, 2.0);
    REQUIRE(r.integral);
    std::vector<WeightedSite> sites;
    for (int j = 0; j < k; ++j)
      sites.push_back(
          {stations[static_cast<size_t>(j)], r.station_potentials[static_cast<size_t>(j)]});
    for (const PlanEntry& e : r.plan) {
      const double own = power_distance(pos[static_cast<size_t>(e.terminal)],
                                        sites[static_cast<size_t>(e.station)], 2.0);
      for (int j = 0; j < k; ++j)
        CHECK(own <= power_distance(pos[static_cast<size_t>(e.terminal)],
                                    sites[static_cast<size_t>(j)], 2.0) +
                         1e-9);
    }
  }
}

TEST_CASE("fractional masses yield a feasible minimal plan") {
  // Two heavy terminals over three stations force a split.
  const std::vector<Terminal> terminals{{{-0.5, 0}, 0.5}, {{0.5, 0}, 0.5}};
  const std::vector<Point> stations{{-0.5, 0}, {0.5, 0}, {0.0, 0.4}};
  const std::vector<double> caps{0.4, 0.4, 0.2};
  const OracleResult r = exact_assignment(terminals, stations, caps, 2.0, 10);
  CHECK_FALSE(r.integral);
  std::vector<double> loads(3, 0.0);
  for (const PlanEntry& e : r.plan) loads[static_cast<size_t>(e.station)] += e.mass;
  CHECK(loads[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(loads[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(loads[2] == doctest::Approx(0.2).epsilon(1e-12));
  // 0.1 of each heavy terminal goes to the middle station.
  const double expected = 2.0 * 0.1 * (0.25 + 0.16);
  CHECK(r.cost == doctest::Approx(expected).epsilon(1e-12));
}
