#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "tcmum/choice.hpp"
#include "tcmum/evaluation.hpp"
#include "tcmum/flows.hpp"
#include "tcmum/leg_index.hpp"

using namespace tcmum;
using namespace fixtures;
using doctest::Approx;

TEST_CASE("breakdown reassembles the inner lp objective") {
  for (const auto& s : {mixed(3), mixed(5), load_scenario(scenario_path("micro.scn"))}) {
    for (double n : {0.0, 3.0, 10.0}) {
      const auto d = open_design(s, 1.0, 1.0, n, 0.5);
      const auto ev = evaluate_design(s, d);
      CHECK(ev.breakdown.total() == Approx(ev.lp_objective).epsilon(1e-7));
      CHECK(ev.report.avg_disutility ==
            Approx(ev.lp_objective / s.total_demand()).epsilon(1e-6));
      CHECK(ev.breakdown.transit_excess_wait >= -1e-9);
      CHECK(ev.breakdown.amod_excess_wait >= -1e-9);
    }
  }
}

TEST_CASE("zero AMoD fleet gives zero AMoD share") {
  const auto s = load_scenario(scenario_path("desk.scn"));
  auto d = DesignPoint::zeros_like(s, 1.0);
  for (int t = 0; t < s.intervals(); ++t)
    for (int l = 0; l < s.line_count(); ++l)
      d.x(t, l) = s.lines[l].kind == LineKind::kRail ? 1.0 : (t % 3 == 0 ? 1.0 : 0.0);
  const auto ev = evaluate_design(s, d);
  CHECK(ev.report.shares.amod_local == 0.0);
  CHECK(ev.report.shares.amod_rail_dt == 0.0);
  CHECK(ev.report.shares.bus_local == Approx(1.0));
  CHECK(ev.report.shares.bus_rail_dt + ev.report.shares.rail_dt == Approx(1.0));
  CHECK(ev.report.amod_utilization == 0.0);
}

TEST_CASE("zero demand") {
  const auto s = single_bus(3, {0, 0, 0});
  const auto ev = evaluate_design(s, open_design(s));
  CHECK(ev.report.objective == 0.0);
  CHECK(ev.report.avg_disutility == 0.0);
  CHECK(ev.report.avg_waiting == 0.0);
  CHECK(ev.report.unserved_local == 0.0);
  CHECK(ev.report.unserved_dt == 0.0);
}

TEST_CASE("single bus route: half-headway wait and no excess") {
  const auto s = single_bus(4, {3, 1, 2, 5});
  const auto ev = evaluate_design(s, open_design(s, 1.0));
  CHECK(ev.report.avg_waiting == Approx(2.5));
  CHECK(ev.report.avg_excess_waiting == Approx(0.0));
  CHECK(ev.report.line_utilization == 1.0);
  CHECK(ev.report.unserved_local == Approx(0.0));
}

TEST_CASE("breakdown with no boardings") {
  const auto s = mixed(3);
  const auto ix = classify_legs(s);
  const auto d = open_design(s);
  const auto theta = ChoiceModel(s, ix).field(d).theta;
  BoardingFlows none{std::vector<double>(ix.flow_count, 0.0)};
  const auto b = objective_breakdown(s, ix, none, theta, d);
  double want = 0.0;
  for (const auto& c : s.commutes)
    for (int t = 0; t < 3; ++t) want += c.demand[t] * (3 - t) * s.grid.delta_t;
  CHECK(b.excess_wait() == Approx(want));
  CHECK(b.transit_expected_wait == 0.0);
  CHECK(b.amod_expected_wait == 0.0);
  CHECK(b.walk == 0.0);
}

TEST_CASE("walk term: independent of design, linear in boardings") {
  const auto s = mixed(3);
  const auto ix = classify_legs(s);
  const auto d = open_design(s);
  const auto ev = evaluate_design(s, ix, d);
  auto other = open_design(s, 2.0, 2.0, 25.0, 0.9);
  const auto b1 = objective_breakdown(s, ix, ev.flows, ev.choice.theta, d);
  const auto b2 = objective_breakdown(s, ix, ev.flows, ev.choice.theta, other);
  CHECK(b1.walk == b2.walk);

  const int r = s.find_route("loc", "bus");
  BoardingFlows only{std::vector<double>(ix.flow_count, 0.0)};
  for (int t = 0; t < 3; ++t) only.z[ix.z_index(r, 0, t)] = ev.flows.at(ix, r, 0, t);
  auto twice = only;
  for (auto& v : twice.z) v *= 2.0;
  const double w1 = objective_breakdown(s, ix, only, ev.choice.theta, d).walk;
  const double w2 = objective_breakdown(s, ix, twice, ev.choice.theta, d).walk;
  CHECK(w1 > 0.0);
  CHECK(w2 == Approx(2.0 * w1));
}

TEST_CASE("mode shares are demand-weighted theta per kind") {
  const auto s = mixed(3);
  const auto ix = classify_legs(s);
  const auto d = open_design(s, 1.0, 1.0, 8.0, 0.4);
  const auto ev = evaluate_design(s, ix, d);
  double amod = 0.0, total = 0.0;
  for (int r : ix.routes_of_commute[0])
    for (int t = 0; t < 3; ++t) {
      const double w = s.commutes[0].demand[t] * ev.choice.theta[r][t];
      total += w;
      if (share_class(s, r) == ShareClass::kAmodLocal) amod += w;
    }
  CHECK(ev.report.shares.amod_local == Approx(amod / total));
  const auto& sh = ev.report.shares;
  CHECK(sh.amod_local + sh.bus_local == Approx(1.0));
  CHECK(sh.amod_rail_dt + sh.bus_rail_dt + sh.rail_dt == Approx(1.0));
}

TEST_CASE("evaluation is deterministic and rejects infeasible designs") {
  const auto s = mixed(3);
  const auto d = open_design(s, 1.0, 1.0, 8.0, 0.4);
  const auto a = evaluate_design(s, d);
  const auto b = evaluate_design(s, d);
  CHECK(a.lp_objective == b.lp_objective);
  CHECK(a.flows.z == b.flows.z);
  auto bad = d;
  bad.x(0, 1) = 0.1;  // below the rail floor
  CHECK_THROWS_WITH_AS(evaluate_design(s, bad), doctest::Contains("design is infeasible"),
                       Error);
}

TEST_CASE("larger fleet cap never hurts the same design") {
  auto s = mixed(3);
  const auto d = open_design(s, 1.0, 1.0, 8.0, 0.4);
  const double before = evaluate_design(s, d).report.objective;
  s.budgets.fleet_size *= 2;
  CHECK(evaluate_design(s, d).report.objective <= before + 1e-6);
}

TEST_CASE("boarding oracle: one commuter, two intervals") {
  const auto s = single_bus(2, {1, 0});
  const auto ix = classify_legs(s);
  const ThetaMatrix theta{{1.0, 1.0}};
  const auto d = open_design(s, 1.0);
  const auto res = enumerate_boarding_oracle(s, ix, theta, d);
  CHECK(res.schedules == 3);
  CHECK(res.objective == Approx(2.5));
  CHECK(res.flows.at(ix, 0, 0, 0) == 1.0);
}

TEST_CASE("boarding oracle: no capacity at the first interval") {
  const auto s = single_bus(2, {1, 0});
  const auto ix = classify_legs(s);
  const ThetaMatrix theta{{1.0, 1.0}};
  auto d = open_design(s, 1.0);
  d.x(0, 0) = 0.0;
  const auto res = enumerate_boarding_oracle(s, ix, theta, d);
  CHECK(res.flows.at(ix, 0, 0, 1) == 1.0);
  const auto b = objective_breakdown(s, ix, res.flows, theta, d);
  CHECK(b.transit_excess_wait == Approx(s.grid.delta_t));
  CHECK(res.objective == Approx(s.grid.delta_t + 2.5));

  CHECK_THROWS_WITH_AS(enumerate_boarding_oracle(s, ix, theta, d, 1),
                       doctest::Contains("too large"), Error);
}

TEST_CASE("boarding oracle agrees with the inner lp on small integral instances") {
  auto s = empty_scenario(3);
  s.lines.push_back(line("B1", LineKind::kBus, {"A", "B"}, 2));
  s.lines.push_back(line("B2", LineKind::kBus, {"B", "C"}, 1, 6.0));
  s.commutes.push_back(commute("c1", CommuteKind::kLocal, {2, 1, 0}));
  s.commutes.push_back(commute("c2", CommuteKind::kLocal, {1, 1, 1}));
  s.routes.push_back(route("c1", "r", {transit("B1", "A", "B")}, 1.0));
  s.routes.push_back(route("c2", "r", {transit("B1", "A", "B"), transit("B2", "B", "C", 6.0)}));
  const auto ix = classify_legs(s);
  const ThetaMatrix theta{{1, 1, 1}, {1, 1, 1}};
  for (int pattern = 0; pattern < 8; ++pattern) {
    auto d = DesignPoint::zeros_like(s);
    for (int t = 0; t < 3; ++t) {
      d.x(t, 0) = (pattern >> t) & 1 ? 1.0 : 0.0;
      d.x(t, 1) = 1.0;
    }
    const auto lp = build_inner_lp(s, ix, theta, d);
    const auto sol = lp::solve_lp(lp.model);
    REQUIRE(sol.status == lp::Status::kOptimal);
    const auto res = enumerate_boarding_oracle(s, ix, theta, d);
    CHECK(sol.objective == Approx(res.objective).epsilon(1e-9));
  }
}

TEST_CASE("grid oracle") {
  const auto s = single_bus(3, {4, 4, 4}, 2.0);
  SUBCASE("monotone toy: most departures win") {
    DesignGrid g;
    g.line_levels = {{0.0, 1.0, 2.0}};
    g.lambda_levels = {1.0};
    const auto pts = g.expand(s);
    REQUIRE(pts.size() == 3);
    const auto res = grid_oracle(s, pts, 2);
    CHECK(res.best.x(0, 0) == 2.0);
    for (std::size_t k = 1; k < pts.size(); ++k)
      CHECK(res.objectives[k] < res.objectives[k - 1]);
    CHECK(res.objectives == grid_oracle(s, pts, 1).objectives);
  }
  SUBCASE("single feasible point") {
    auto t = s;
    t.budgets.bus_budget = 3;
    DesignGrid g;
    g.line_levels = {{1.0, 2.0}};
    g.lambda_levels = {1.0};
    const auto res = grid_oracle(t, g.expand(t));
    CHECK(res.best.x(2, 0) == 1.0);
    CHECK(std::isnan(res.objectives[1]));
  }
  SUBCASE("nothing feasible") {
    auto t = s;
    t.budgets.bus_budget = 1;
    DesignGrid g;
    g.line_levels = {{1.0, 2.0}};
    g.lambda_levels = {1.0};
    CHECK_THROWS_WITH_AS(grid_oracle(t, g.expand(t)), doctest::Contains("no feasible point"),
                         Error);
  }
}
