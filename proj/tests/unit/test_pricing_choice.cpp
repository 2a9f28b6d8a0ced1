#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "tcmum/choice.hpp"
#include "tcmum/leg_index.hpp"
#include "tcmum/pricing.hpp"
#include "tcmum/units.hpp"

using namespace tcmum;
using namespace fixtures;
using doctest::Approx;

TEST_CASE("amod fare: per-mile/per-minute branch and minimum fare") {
  const FareSchedule f;
  CHECK(amod_fare(f, units::miles_to_km(2.0), 10.0) == Approx(8.42).epsilon(1e-12));
  CHECK(amod_fare(f, units::miles_to_km(0.5), 2.0) == Approx(4.98));
  CHECK(amod_fare(f, 0.0, 0.0) == Approx(4.98));
  // nondecreasing, floored
  double prev = 0.0;
  for (double d = 0.0; d < 10.0; d += 0.37) {
    const double v = amod_fare(f, d, 3.0 * d);
    CHECK(v >= prev);
    CHECK(v >= f.f_min);
    prev = v;
  }
}

TEST_CASE("route price") {
  auto s = mixed();
  const int rail = s.find_route("dt", "rail");
  const int bus_rail = s.find_route("dt", "bus_rail");
  CHECK(route_price(s, s.routes[rail], 1.0) == Approx(2.5));
  CHECK(route_price(s, s.routes[bus_rail], 1.0) == Approx(2.5));
  auto r = route("dt", "x", {amod("S", units::miles_to_km(2.0), 10.0), transit("R1", "S", "D")});
  CHECK(route_price(s, r, 0.5) == Approx(4.21));
  s.fares.transfer_discount = 0.5;
  CHECK(route_price(s, s.routes[bus_rail], 1.0) == Approx(3.75));
}

TEST_CASE("expected waits") {
  CHECK(transit_wait_min(5.0, 1.0) == Approx(2.5));
  const auto st = station();
  const double want = 0.667 * std::sqrt(90.0 / 100.0) / units::mph_to_kmh(20.0) * 60.0;
  CHECK(amod_wait_min(st, 100.0, 20.0) == Approx(want));
  CHECK(amod_wait_min(st, 100.0, 20.0) == Approx(1.18).epsilon(0.01));
}

TEST_CASE("route utility: unavailable sentinel and linear price term") {
  auto s = mixed();
  auto d = open_design(s);
  const int bus = s.find_route("loc", "bus");
  const double u = route_utility(s, bus, 0, d);
  CHECK(std::isfinite(u));
  CHECK(u < 0.0);
  d.x(0, 0) = 0.0;
  CHECK(route_utility(s, bus, 0, d) == kUnavailable);
  CHECK(std::isfinite(route_utility(s, bus, 1, d)));

  d = open_design(s);
  auto s2 = s;
  s2.utility.beta_money *= 2.0;
  const double price = route_price(s, s.routes[bus], d.lambda());
  CHECK(route_utility(s2, bus, 0, d) == Approx(route_utility(s, bus, 0, d) - price));
}

TEST_CASE("mnl probabilities") {
  const double eq[] = {-1.0, -1.0};
  auto p = choice_probs_mnl(eq);
  CHECK(p[0] == Approx(0.5));
  CHECK(p[1] == Approx(0.5));
  const double one[] = {-3.0};
  CHECK(choice_probs_mnl(one)[0] == 1.0);
  const double two[] = {0.0, std::log(3.0)};
  p = choice_probs_mnl(two);
  CHECK(p[0] == Approx(0.25));
  CHECK(p[1] == Approx(0.75));
  const double part[] = {kUnavailable, -2.0};
  p = choice_probs_mnl(part);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == 1.0);
  const double none[] = {kUnavailable, kUnavailable};
  CHECK_THROWS_WITH_AS(choice_probs_mnl(none), "no available route for commute", Error);
}

TEST_CASE("mnl: sums to one and is translation invariant") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-20.0, 0.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> u(1 + trial % 6);
    for (auto& v : u) v = U(rng);
    auto p = choice_probs_mnl(u);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    auto shifted = u;
    for (auto& v : shifted) v += 7.25;
    const auto q = choice_probs_mnl(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-12);
  }
}

TEST_CASE("nested logit") {
  ChoiceModelSpec spec;
  spec.kind = ChoiceKind::kNested;

  SUBCASE("singleton nests reduce to mnl") {
    const double u[] = {-1.0, -2.0, -0.5};
    const ModeClass n[] = {ModeClass::kTransit, ModeClass::kAmod, ModeClass::kMixed};
    const auto p = choice_probs_nested(u, n, spec);
    const auto q = choice_probs_mnl(u);
    for (int i = 0; i < 3; ++i) CHECK(p[i] == Approx(q[i]).epsilon(1e-12));
  }
  SUBCASE("two identical nests split evenly") {
    const double u[] = {-1.0, -2.0, -1.0, -2.0};
    const ModeClass n[] = {ModeClass::kTransit, ModeClass::kTransit, ModeClass::kAmod,
                           ModeClass::kAmod};
    const auto p = choice_probs_nested(u, n, spec);
    CHECK(p[0] + p[1] == Approx(0.5));
    CHECK(p[2] + p[3] == Approx(0.5));
  }
  SUBCASE("logsum example") {
    const double u[] = {0.0, 0.0, 0.0};
    const ModeClass n[] = {ModeClass::kAmod, ModeClass::kAmod, ModeClass::kTransit};
    const auto p = choice_probs_nested(u, n, spec);
    CHECK(p[0] == Approx(1.0 / 3.0));
    CHECK(p[1] == Approx(1.0 / 3.0));
    CHECK(p[2] == Approx(1.0 / 3.0));
  }
  SUBCASE("equal scales give mnl at that scale") {
    spec.phi = spec.phi_transit = spec.phi_amod = spec.phi_mixed = 0.7;
    const double u[] = {-1.0, -2.5, -0.5, -3.0, -1.2};
    const ModeClass n[] = {ModeClass::kTransit, ModeClass::kTransit, ModeClass::kAmod,
                           ModeClass::kMixed, ModeClass::kMixed};
    const auto p = choice_probs_nested(u, n, spec);
    const auto q = choice_probs_mnl(u, 0.7);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-9);
  }
  SUBCASE("nests with distinct scales") {
    spec.phi = 0.5;
    spec.phi_amod = 2.0;
    const double u[] = {0.0, 0.0, 0.0};
    const ModeClass n[] = {ModeClass::kAmod, ModeClass::kAmod, ModeClass::kTransit};
    const auto p = choice_probs_nested(u, n, spec);
    // I_A = ln(2)/2, I_P = 0: P(A) = 2^0.25 / (2^0.25 + 1)
    const double pa = std::pow(2.0, 0.25) / (std::pow(2.0, 0.25) + 1.0);
    CHECK(p[0] == Approx(pa / 2));
    CHECK(p[2] == Approx(1.0 - pa));
  }
  SUBCASE("all nests empty") {
    const double u[] = {kUnavailable};
    const ModeClass n[] = {ModeClass::kTransit};
    CHECK_THROWS_AS(choice_probs_nested(u, n, spec), Error);
  }
}

namespace {

// Central differences of every route probability of commute c at t.
void check_gradient(const Scenario& s, const DesignPoint& d, int c, int t) {
  const auto ix = classify_legs(s);
  const ChoiceModel model(s, ix);
  const auto grad = model.gradient(c, t, d);
  const auto base = model.probabilities(c, t, d);
  REQUIRE(grad.size() == base.size());
  for (int id = 0; id < d.variable_count(); ++id) {
    const double h = 1e-5 * std::max(1.0, std::abs(d.value(id)));
    auto up = d, dn = d;
    up.value(id) += h;
    dn.value(id) -= h;
    const auto pu = model.probabilities(c, t, up);
    const auto pd = model.probabilities(c, t, dn);
    double sum = 0.0;
    for (std::size_t r = 0; r < base.size(); ++r) {
      double analytic = 0.0;
      for (const auto& [k, v] : grad[r])
        if (k == id) analytic = v;
      const double fd = (pu[r] - pd[r]) / (2 * h);
      const double scale = std::max(1e-6, std::abs(fd));
      CHECK(std::abs(analytic - fd) / scale <= 1e-4);
      sum += analytic;
    }
    CHECK(std::abs(sum) <= 1e-10);
  }
}

}  // namespace

TEST_CASE("choice gradient matches central differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (auto kind : {ChoiceKind::kMultinomial, ChoiceKind::kNested}) {
    auto s = mixed(2);
    s.choice.kind = kind;
    s.choice.phi = 0.8;
    s.choice.phi_amod = 1.3;
    for (int trial = 0; trial < 5; ++trial) {
      auto d = open_design(s, 0.3 + 2 * U(rng), 0.6 + 1.5 * U(rng), 1 + 20 * U(rng),
                           0.1 + 0.9 * U(rng));
      for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 2; ++t) check_gradient(s, d, c, t);
    }
  }
}

TEST_CASE("choice gradient: signs, single route, boundary") {
  auto s = mixed(2);
  const auto d = open_design(s, 0.5, 1.0, 3.0, 0.8);
  const auto ix = classify_legs(s);
  const ChoiceModel model(s, ix);
  const auto g = model.gradient(0, 0, d);  // loc: bus, amod
  double dlambda = 0.0;
  for (const auto& [k, v] : g[1])
    if (k == d.lambda_id()) dlambda = v;
  CHECK(dlambda < 0.0);
  double dx = 0.0;
  for (const auto& [k, v] : g[0])
    if (k == d.x_id(0, 0)) dx = v;
  CHECK(dx > 0.0);

  auto one = single_bus(2, {1, 1});
  auto od = open_design(one);
  const auto oix = classify_legs(one);
  const ChoiceModel om(one, oix);
  const auto og = om.gradient(0, 0, od);
  for (const auto& [k, v] : og[0]) CHECK(v == 0.0);

  auto closed = d;
  closed.x(0, 0) = 0.0;
  CHECK_THROWS_WITH_AS(model.gradient(0, 0, closed),
                       doctest::Contains("nondifferentiable at boundary"), Error);
}

TEST_CASE("linearized theta") {
  auto s = mixed(2);
  const auto ix = classify_legs(s);
  const ChoiceModel model(s, ix);
  const auto anchor = open_design(s, 1.0, 1.2, 8.0, 0.6);
  const auto lin = linearize_theta(model, anchor);
  const auto exact = model.field(anchor);
  for (int r = 0; r < ix.route_count(); ++r)
    for (int t = 0; t < 2; ++t) CHECK(lin.value(r, t, anchor) == Approx(exact.theta[r][t]));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  for (int trial = 0; trial < 20; ++trial) {
    auto v = anchor;
    for (int id = 0; id < v.variable_count(); ++id) v.value(id) += U(rng);
    for (int c = 0; c < ix.commute_count(); ++c)
      for (int t = 0; t < 2; ++t) {
        double sum = 0.0;
        for (int r : ix.routes_of_commute[c]) sum += lin.value(r, t, v);
        CHECK(sum == Approx(1.0).epsilon(1e-12));
      }
  }

  // second-order remainder: halving the step quarters the error
  auto err = [&](double rho) {
    auto v = anchor;
    v.x(0, 0) += rho;
    const auto f = model.field(v);
    const int bus = s.find_route("loc", "bus");
    return std::abs(lin.value(bus, 0, v) - f.theta[bus][0]);
  };
  const double e1 = err(0.1), e2 = err(0.05);
  CHECK(e1 > 0.0);
  CHECK(e1 / e2 == Approx(4.0).epsilon(0.15));
}

TEST_CASE("monotonicity in frequency and discount factor") {
  auto s = mixed(2);
  const auto ix = classify_legs(s);
  const ChoiceModel model(s, ix);
  auto d = open_design(s, 1.0, 1.2, 8.0, 0.6);
  const auto base = model.field(d);
  auto more = d;
  more.x(1, 0) += 0.5;
  const auto f = model.field(more);
  for (int r = 0; r < ix.route_count(); ++r) {
    bool uses_bus = false;
    for (const auto& leg : ix.legs[r]) uses_bus |= leg.mode == LegMode::kTransit && leg.line == 0;
    if (uses_bus) CHECK(f.theta[r][1] > base.theta[r][1]);
  }
  auto pricier = d;
  pricier.lambda() = 0.9;
  const auto g = model.field(pricier);
  for (int r = 0; r < ix.route_count(); ++r)
    if (!ix.amod_legs[r].empty()) CHECK(g.theta[r][0] < base.theta[r][0]);
}
