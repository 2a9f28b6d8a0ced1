#include "tcmum/flows.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tcmum/pricing.hpp"

namespace tcmum {
namespace {

using Terms = std::vector<std::pair<int, double>>;

std::string tag(const char* kind, int a, int b, int t) {
  return std::string(kind) + "_" + std::to_string(a) + "_" + std::to_string(b) + "_" +
         std::to_string(t + 1);
}

double discount(const ResolvedLeg& leg, bool shared) { return shared ? leg.discount : 1.0; }

// AMoD legs competing for vehicles at each station: Y(s), M(s) and N(s).
std::vector<LegRef> station_legs(const LegIndex& index, int s) {
  std::vector<LegRef> out = index.direct[s];
  out.insert(out.end(), index.first_mile[s].begin(), index.first_mile[s].end());
  out.insert(out.end(), index.last_mile[s].begin(), index.last_mile[s].end());
  return out;
}

// Leg precedence (6e) with travel-time shifts, and sharing consistency (23).
void add_flow_structure(lp::LinearProgram& model, const LegIndex& index, bool shared) {
  const int T = index.intervals;
  for (int r = 0; r < index.route_count(); ++r) {
    for (int i = 1; i < index.leg_count(r); ++i) {
      const int shift = index.legs[r][i - 1].shift;
      for (int tau = 0; tau < T; ++tau) {
        Terms terms;
        for (int t = 0; t <= tau; ++t) terms.emplace_back(index.z_index(r, i, t), 1.0);
        for (int t = 0; t <= tau - shift; ++t)
          terms.emplace_back(index.z_index(r, i - 1, t), -1.0);
        model.add_row(std::move(terms), lp::Sense::kLessEqual, 0.0, tag("prec", r, i, tau));
      }
    }
  }
  if (!shared) return;
  for (int p = 0; p < static_cast<int>(index.shared_members.size()); ++p) {
    // group member legs by commute; consecutive commutes must board equally
    std::map<int, std::vector<LegRef>> by_commute;
    for (const auto& m : index.shared_members[p])
      by_commute[index.route_commute[m.route]].push_back(m);
    if (by_commute.size() < 2) continue;
    std::vector<std::vector<LegRef>> groups;
    for (auto& [c, legs] : by_commute) groups.push_back(legs);
    for (std::size_t g = 1; g < groups.size(); ++g) {
      for (int t = 0; t < T; ++t) {
        Terms terms;
        for (const auto& m : groups[g - 1])
          terms.emplace_back(index.z_index(m.route, m.leg, t), 1.0);
        for (const auto& m : groups[g])
          terms.emplace_back(index.z_index(m.route, m.leg, t), -1.0);
        model.add_row(std::move(terms), lp::Sense::kEqual, 0.0,
                      tag("share", p, static_cast<int>(g), t));
      }
    }
  }
}

}  // namespace

double expected_wait(const Scenario& scenario, const ResolvedLeg& leg, int t,
                     const DesignPoint& design) {
  if (leg.mode == LegMode::kTransit) {
    const double x = design.x(t, leg.line);
    return x > 0.0 ? transit_wait_min(scenario.grid.delta_t, x) : 0.0;
  }
  const double n = design.n(t, leg.station);
  return n > 0.0 ? amod_wait_min(scenario.stations[leg.station], n,
                                 scenario.utility.amod_speed)
                 : 0.0;
}

double boarding_cost(const Scenario& scenario, const LegIndex& index, int route,
                     int leg, int t, double wait) {
  const int T = index.intervals;
  const double delta = scenario.grid.delta_t;
  double c = wait - delta * (T - t);
  if (leg == 0) c += scenario.routes[route].walk_min;
  if (leg + 1 < index.leg_count(route)) {
    const int arrive = t + index.legs[route][leg].shift;
    c += delta * std::max(0, T - arrive);
  }
  return c;
}

double arrival_wait_constant(const Scenario& scenario) {
  const int T = scenario.intervals();
  double s = 0.0;
  for (const auto& c : scenario.commutes)
    for (int t = 0; t < T; ++t) s += c.demand[t] * (T - t);
  return scenario.grid.delta_t * s;
}

InnerLp build_inner_lp(const Scenario& scenario, const LegIndex& index,
                       const ThetaMatrix& theta, const DesignPoint& design,
                       bool shared) {
  const int T = index.intervals;
  InnerLp out;
  auto& model = out.model;

  for (int r = 0; r < index.route_count(); ++r) {
    for (int i = 0; i < index.leg_count(r); ++i) {
      const auto& leg = index.legs[r][i];
      for (int t = 0; t < T; ++t) {
        const bool open = leg.mode == LegMode::kTransit ? design.x(t, leg.line) > 0.0
                                                        : design.n(t, leg.station) > 0.0;
        const double cost =
            boarding_cost(scenario, index, r, i, t, expected_wait(scenario, leg, t, design));
        model.add_variable(tag("z", r, i, t), 0.0, open ? lp::kInf : 0.0, cost);
      }
    }
  }
  model.set_offset(arrival_wait_constant(scenario));

  for (int l = 0; l < scenario.line_count(); ++l) {
    const double capacity = scenario.lines[l].capacity;
    for (int p = 0; p < static_cast<int>(index.through[l].size()); ++p) {
      const auto& legs = index.through[l][p];
      if (legs.empty()) continue;
      for (int t = 0; t < T; ++t) {
        Terms terms;
        for (const auto& ref : legs) terms.emplace_back(index.z_index(ref.route, ref.leg, t), 1.0);
        out.capacity_rows.push_back(model.add_row(std::move(terms), lp::Sense::kLessEqual,
                                                  capacity * design.x(t, l),
                                                  tag("cap", l, p, t)));
      }
    }
  }
  for (int s = 0; s < scenario.station_count(); ++s) {
    const auto legs = station_legs(index, s);
    if (legs.empty()) continue;
    const double ratio = availability_ratio(scenario.stations[s], scenario.grid.delta_t,
                                            scenario.utility.amod_speed);
    for (int t = 0; t < T; ++t) {
      Terms terms;
      for (const auto& ref : legs)
        terms.emplace_back(index.z_index(ref.route, ref.leg, t),
                           discount(index.leg(ref), shared));
      out.availability_rows.push_back(model.add_row(std::move(terms), lp::Sense::kLessEqual,
                                                    ratio * design.n(t, s),
                                                    tag("avail", s, 0, t)));
    }
  }
  for (int r = 0; r < index.route_count(); ++r) {
    const auto& demand = scenario.commutes[index.route_commute[r]].demand;
    double cumulative = 0.0;
    for (int tau = 0; tau < T; ++tau) {
      cumulative += demand[tau] * theta[r][tau];
      Terms terms;
      for (int t = 0; t <= tau; ++t) terms.emplace_back(index.z_index(r, 0, t), 1.0);
      model.add_row(std::move(terms), lp::Sense::kLessEqual, cumulative,
                    tag("dem", r, 0, tau));
    }
  }
  add_flow_structure(model, index, shared);
  return out;
}

IterationLp build_iteration_lp(const Scenario& scenario, const LegIndex& index,
                               const AffineTheta& theta_hat,
                               const IterationLpOptions& options,
                               const BoardingFlows* anchor_flows) {
  const int T = index.intervals;
  const int L = scenario.line_count();
  const int S = scenario.station_count();
  const auto& anchor = theta_hat.anchor();
  const auto& b = scenario.budgets;
  const auto& alg = scenario.algorithm;
  const double delta = scenario.grid.delta_t;
  const double speed = scenario.utility.amod_speed;

  IterationLp out;
  auto& model = out.model;

  // z first, design after, so z indices match LegIndex::z_index
  for (int r = 0; r < index.route_count(); ++r)
    for (int i = 0; i < index.leg_count(r); ++i)
      for (int t = 0; t < T; ++t) model.add_variable(tag("z", r, i, t), 0.0, lp::kInf);

  out.design_var.resize(anchor.variable_count());
  auto box = [](double centre, double step, double lo, double hi) {
    double a = std::max(lo, centre - step);
    double c = std::min(hi, centre + step);
    if (a > c) a = c = std::clamp(centre, lo, hi);
    return std::pair{a, c};
  };
  for (int t = 0; t < T; ++t) {
    for (int l = 0; l < L; ++l) {
      const bool rail = scenario.lines[l].kind == LineKind::kRail;
      const double x0 = anchor.x(t, l);
      auto [lo, hi] = rail ? box(x0, alg.rho_rail, b.rail_min_rate, b.rail_max_rate)
                           : box(x0, alg.rho_bus, 0.0, b.bus_max_rate);
      if (!rail && options.fix_bus) lo = hi = x0;
      const int v = model.add_variable(tag("x", l, 0, t), lo, hi);
      model.set_hint(v, x0);
      out.design_var[anchor.x_id(t, l)] = v;
    }
  }
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      const double n0 = anchor.n(t, s);
      const auto [lo, hi] = box(n0, alg.eta, 0.0, b.fleet_size);
      const int v = model.add_variable(tag("N", s, 0, t), lo, hi);
      model.set_hint(v, n0);
      out.design_var[anchor.n_id(t, s)] = v;
    }
  }
  {
    const double l0 = anchor.lambda();
    const auto [lo, hi] = box(l0, alg.sigma, scenario.fares.lambda_min,
                              scenario.fares.lambda_max);
    const int v = model.add_variable("lambda", lo, hi);
    model.set_hint(v, l0);
    out.design_var[anchor.lambda_id()] = v;
  }

  model.set_offset(arrival_wait_constant(scenario));

  // boarding costs with waits frozen at the anchor; a closed service that
  // may open inside the box is priced at the box edge
  for (int r = 0; r < index.route_count(); ++r) {
    for (int i = 0; i < index.leg_count(r); ++i) {
      const auto& leg = index.legs[r][i];
      const bool transit = leg.mode == LegMode::kTransit;
      for (int t = 0; t < T; ++t) {
        const int dv = out.design_var[transit ? anchor.x_id(t, leg.line)
                                              : anchor.n_id(t, leg.station)];
        const double v0 = transit ? anchor.x(t, leg.line) : anchor.n(t, leg.station);
        const double upper = model.variable(dv).upper;
        const int z = index.z_index(r, i, t);
        double wait = 0.0;
        if (v0 > 0.0 || upper > 0.0) {
          const double at = v0 > 0.0 ? v0 : upper;
          wait = transit ? transit_wait_min(delta, at)
                         : amod_wait_min(scenario.stations[leg.station], at, speed);
        } else {
          model.set_bounds(z, 0.0, 0.0);
        }
        model.set_cost(z, boarding_cost(scenario, index, r, i, t, wait));

        if (options.linearize_wait_terms && anchor_flows && v0 > 0.0) {
          const double z0 = anchor_flows->z[z];
          if (z0 <= 0.0) continue;
          const double slope = transit ? -delta / (2.0 * v0 * v0)
                                       : -0.5 * mean_local_trip_min(
                                                    scenario.stations[leg.station], speed) /
                                             (v0 * std::sqrt(v0));
          model.add_cost(dv, z0 * slope);
          model.add_offset(-z0 * slope * v0);
        }
      }
    }
  }

  for (int l = 0; l < L; ++l) {
    const double capacity = scenario.lines[l].capacity;
    for (int p = 0; p < static_cast<int>(index.through[l].size()); ++p) {
      const auto& legs = index.through[l][p];
      if (legs.empty()) continue;
      for (int t = 0; t < T; ++t) {
        Terms terms;
        for (const auto& ref : legs) terms.emplace_back(index.z_index(ref.route, ref.leg, t), 1.0);
        terms.emplace_back(out.design_var[anchor.x_id(t, l)], -capacity);
        model.add_row(std::move(terms), lp::Sense::kLessEqual, 0.0, tag("cap", l, p, t));
      }
    }
  }
  for (int s = 0; s < S; ++s) {
    const auto legs = station_legs(index, s);
    if (legs.empty()) continue;
    const double ratio = availability_ratio(scenario.stations[s], delta, speed);
    for (int t = 0; t < T; ++t) {
      Terms terms;
      for (const auto& ref : legs)
        terms.emplace_back(index.z_index(ref.route, ref.leg, t),
                           discount(index.leg(ref), options.shared));
      terms.emplace_back(out.design_var[anchor.n_id(t, s)], -ratio);
      model.add_row(std::move(terms), lp::Sense::kLessEqual, 0.0, tag("avail", s, 0, t));
    }
  }

  // cumulative demand (6d) with theta replaced by its affine model
  for (int r = 0; r < index.route_count(); ++r) {
    const auto& demand = scenario.commutes[index.route_commute[r]].demand;
    std::map<int, double> slope;
    double rhs = 0.0;
    for (int tau = 0; tau < T; ++tau) {
      const double d = demand[tau];
      rhs += d * theta_hat.constant(r, tau);
      if (d != 0.0 && !theta_hat.field().grad.empty()) {
        for (const auto& [id, g] : theta_hat.slope(r, tau)) {
          slope[id] += d * g;
          rhs -= d * g * anchor.value(id);
        }
      }
      Terms terms;
      for (int t = 0; t <= tau; ++t) terms.emplace_back(index.z_index(r, 0, t), 1.0);
      for (const auto& [id, g] : slope)
        if (g != 0.0) terms.emplace_back(out.design_var[id], -g);
      model.add_row(std::move(terms), lp::Sense::kLessEqual, rhs, tag("dem", r, 0, tau));
    }
  }
  add_flow_structure(model, index, options.shared);

  // budgets
  Terms bus, rail;
  for (int t = 0; t < T; ++t) {
    for (int l = 0; l < L; ++l) {
      const auto& line = scenario.lines[l];
      (line.kind == LineKind::kRail ? rail : bus)
          .emplace_back(out.design_var[anchor.x_id(t, l)], line.cost_per_departure);
    }
  }
  if (!bus.empty()) model.add_row(std::move(bus), lp::Sense::kLessEqual, b.bus_budget, "budget_bus");
  if (!rail.empty())
    model.add_row(std::move(rail), lp::Sense::kLessEqual, b.rail_budget, "budget_rail");
  if (S > 0) {
    for (int t = 0; t < T; ++t) {
      Terms fleet;
      for (int s = 0; s < S; ++s) fleet.emplace_back(out.design_var[anchor.n_id(t, s)], 1.0);
      model.add_row(std::move(fleet), lp::Sense::kLessEqual, b.fleet_size,
                    tag("fleet", 0, 0, t));
    }
  }
  return out;
}

DesignPoint extract_design(const IterationLp& lp, const std::vector<double>& x,
                           const DesignPoint& shape) {
  DesignPoint out = shape;
  for (int id = 0; id < shape.variable_count(); ++id) {
    const auto& v = lp.model.variable(lp.design_var[id]);
    double value = std::clamp(x[lp.design_var[id]], v.lower, v.upper);
    // drop solver round-off next to a bound
    for (double b : {v.lower, v.upper})
      if (std::abs(value - b) <= 1e-9 * std::max(1.0, std::abs(b))) value = b;
    out.value(id) = value;
  }
  return out;
}

BoardingFlows extract_flows(const LegIndex& index, const std::vector<double>& x) {
  return {std::vector<double>(x.begin(), x.begin() + index.flow_count)};
}

}  // namespace tcmum
