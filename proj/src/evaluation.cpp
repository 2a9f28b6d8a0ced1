#include "tcmum/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "tcmum/feasibility.hpp"
#include "tcmum/pricing.hpp"

namespace tcmum {

ObjectiveBreakdown objective_breakdown(const Scenario& scenario, const LegIndex& index,
                                       const BoardingFlows& flows,
                                       const ThetaMatrix& theta,
                                       const DesignPoint& design, bool shared) {
  (void)shared;
  const int T = index.intervals;
  const double delta = scenario.grid.delta_t;
  ObjectiveBreakdown out;

  auto z = [&](LegRef ref, int t) { return flows.at(index, ref.route, ref.leg, t); };
  auto boarded_by = [&](LegRef ref, int tau) {
    double s = 0.0;
    for (int t = 0; t <= tau; ++t) s += z(ref, t);
    return s;
  };
  // previous leg's boardings that have reached this leg's boarding point by tau
  auto arrived_by = [&](LegRef ref, int tau) {
    const LegRef prev{ref.route, ref.leg - 1};
    return tau - index.leg(prev).shift >= 0 ? boarded_by(prev, tau - index.leg(prev).shift)
                                            : 0.0;
  };
  auto demand_by = [&](int route, int tau) {
    const auto& d = scenario.commutes[index.route_commute[route]].demand;
    double s = 0.0;
    for (int t = 0; t <= tau; ++t) s += d[t] * theta[route][t];
    return s;
  };

  // expected waits and walking
  for (int r = 0; r < index.route_count(); ++r) {
    for (int i = 0; i < index.leg_count(r); ++i) {
      const auto& leg = index.legs[r][i];
      for (int t = 0; t < T; ++t) {
        const double flow = flows.at(index, r, i, t);
        if (flow == 0.0) continue;
        if (i == 0) out.walk += flow * scenario.routes[r].walk_min;
        if (leg.mode == LegMode::kTransit) {
          const double x = design.x(t, leg.line);
          if (x > 0.0) out.transit_expected_wait += flow * transit_wait_min(delta, x);
        } else {
          const double n = design.n(t, leg.station);
          if (n > 0.0)
            out.amod_expected_wait += flow * amod_wait_min(scenario.stations[leg.station], n,
                                                           scenario.utility.amod_speed);
        }
      }
    }
  }

  // W_Transit = AD + XD - BD per stop, line and tau
  for (int l = 0; l < scenario.line_count(); ++l) {
    for (int p = 0; p < static_cast<int>(index.boarding[l].size()); ++p) {
      for (int tau = 0; tau < T; ++tau) {
        double w = 0.0;
        for (const auto& ref : index.first_boarding[l][p]) w += demand_by(ref.route, tau);
        for (const auto& ref : index.transfer[l][p]) w += arrived_by(ref, tau);
        for (const auto& ref : index.boarding[l][p]) w -= boarded_by(ref, tau);
        out.transit_excess_wait += w * delta;
      }
    }
  }
  // W_Direct + W_First + W_Last per station and tau
  for (int s = 0; s < scenario.station_count(); ++s) {
    for (int tau = 0; tau < T; ++tau) {
      double w = 0.0;
      for (const auto* set : {&index.direct[s], &index.first_mile[s]})
        for (const auto& ref : *set) w += demand_by(ref.route, tau) - boarded_by(ref, tau);
      for (const auto& ref : index.last_mile[s]) w += arrived_by(ref, tau) - boarded_by(ref, tau);
      out.amod_excess_wait += w * delta;
    }
  }
  // demand not assigned to any route waits through the horizon
  for (int c = 0; c < index.commute_count(); ++c) {
    const auto& d = scenario.commutes[c].demand;
    for (int t = 0; t < T; ++t) {
      double assigned = 0.0;
      for (int r : index.routes_of_commute[c]) assigned += theta[r][t];
      const double left = std::max(0.0, 1.0 - assigned);
      out.stranded_wait += d[t] * left * (T - t) * delta;
    }
  }
  return out;
}

ShareClass share_class(const Scenario& scenario, int route) {
  const auto& r = scenario.routes[route];
  bool amod = false;
  bool bus = false;
  for (const auto& leg : r.legs) {
    if (leg.mode == LegMode::kAmod) {
      amod = true;
    } else {
      const int l = scenario.find_line(leg.line);
      if (l >= 0 && scenario.lines[l].kind == LineKind::kBus) bus = true;
    }
  }
  const int c = scenario.find_commute(r.commute);
  const bool local = c >= 0 && scenario.commutes[c].kind == CommuteKind::kLocal;
  if (local) return amod ? ShareClass::kAmodLocal : ShareClass::kBusLocal;
  if (amod) return ShareClass::kAmodRail;
  return bus ? ShareClass::kBusRail : ShareClass::kRail;
}

Evaluation evaluate_design(const Scenario& scenario, const LegIndex& index,
                           const DesignPoint& design) {
  const auto violations = check_design_feasibility(scenario, design);
  if (!violations.empty()) {
    std::string msg = "design is infeasible:";
    for (const auto& v : violations) msg += "\n  " + v.message();
    throw Error(msg);
  }
  const int T = index.intervals;
  Evaluation out;
  const ChoiceModel choice(scenario, index);
  out.choice = choice.field(design);
  const auto& theta = out.choice.theta;

  const auto inner = build_inner_lp(scenario, index, theta, design, true);
  const auto sol = lp::solve_lp(inner.model);
  if (sol.status != lp::Status::kOptimal)
    throw lp::SolverError("inner LP is " + lp::to_string(sol.status));
  out.flows = extract_flows(index, sol.x);
  out.lp_objective = sol.objective;
  out.breakdown = objective_breakdown(scenario, index, out.flows, theta, design, true);

  auto& rep = out.report;
  rep.objective = out.breakdown.total();
  rep.total_demand = scenario.total_demand();
  rep.lambda_star = design.lambda();
  const double D = rep.total_demand;
  if (D > 0.0) {
    rep.avg_disutility = rep.objective / D;
    rep.avg_walking = out.breakdown.walk / D;
    rep.avg_waiting =
        (out.breakdown.transit_expected_wait + out.breakdown.amod_expected_wait) / D;
    rep.avg_excess_waiting = out.breakdown.excess_wait() / D;
  }

  // shares, utility and unserved demand
  double routed[2] = {0.0, 0.0};  // local, downtown
  double by_class[5] = {};
  double utility_sum = 0.0;
  double utility_weight = 0.0;
  double demand_kind[2] = {0.0, 0.0};
  double boarded_kind[2] = {0.0, 0.0};
  for (int c = 0; c < index.commute_count(); ++c) {
    const int k = scenario.commutes[c].kind == CommuteKind::kLocal ? 0 : 1;
    for (int t = 0; t < T; ++t) demand_kind[k] += scenario.commutes[c].demand[t];
  }
  for (int r = 0; r < index.route_count(); ++r) {
    const int c = index.route_commute[r];
    const int k = scenario.commutes[c].kind == CommuteKind::kLocal ? 0 : 1;
    const auto cls = share_class(scenario, r);
    for (int t = 0; t < T; ++t) {
      const double w = scenario.commutes[c].demand[t] * theta[r][t];
      boarded_kind[k] += out.flows.at(index, r, 0, t);
      if (w <= 0.0) continue;
      routed[k] += w;
      by_class[static_cast<int>(cls)] += w;
      utility_sum += w * out.choice.utility[r][t];
      utility_weight += w;
    }
  }
  auto share = [&](ShareClass cls, int k) {
    return routed[k] > 0.0 ? by_class[static_cast<int>(cls)] / routed[k] : 0.0;
  };
  rep.shares.amod_local = share(ShareClass::kAmodLocal, 0);
  rep.shares.bus_local = share(ShareClass::kBusLocal, 0);
  rep.shares.amod_rail_dt = share(ShareClass::kAmodRail, 1);
  rep.shares.bus_rail_dt = share(ShareClass::kBusRail, 1);
  rep.shares.rail_dt = share(ShareClass::kRail, 1);
  rep.avg_utility = utility_weight > 0.0 ? utility_sum / utility_weight : 0.0;
  auto unserved = [&](int k) {
    if (demand_kind[k] <= 0.0) return 0.0;
    return std::clamp((demand_kind[k] - boarded_kind[k]) / demand_kind[k], 0.0, 1.0);
  };
  rep.unserved_local = unserved(0);
  rep.unserved_dt = unserved(1);

  int bus_lines = 0;
  int used = 0;
  for (int l = 0; l < scenario.line_count(); ++l) {
    if (scenario.lines[l].kind != LineKind::kBus) continue;
    ++bus_lines;
    double total = 0.0;
    for (int t = 0; t < T; ++t) total += design.x(t, l);
    if (total > 0.5) ++used;
  }
  rep.line_utilization = bus_lines > 0 ? static_cast<double>(used) / bus_lines : 0.0;

  double vehicles_used = 0.0;
  double vehicles_free = 0.0;
  for (int s = 0; s < scenario.station_count(); ++s) {
    const double ratio = availability_ratio(scenario.stations[s], scenario.grid.delta_t,
                                            scenario.utility.amod_speed);
    for (int t = 0; t < T; ++t) vehicles_free += ratio * design.n(t, s);
    for (const auto* set : {&index.direct[s], &index.first_mile[s], &index.last_mile[s]})
      for (const auto& ref : *set)
        for (int t = 0; t < T; ++t) vehicles_used += index.leg(ref).discount * out.flows.at(index, ref.route, ref.leg, t);
  }
  rep.amod_utilization =
      vehicles_free > 0.0 ? std::clamp(vehicles_used / vehicles_free, 0.0, 1.0) : 0.0;
  return out;
}

Evaluation evaluate_design(const Scenario& scenario, const DesignPoint& design) {
  const auto index = classify_legs(scenario);
  return evaluate_design(scenario, index, design);
}

std::size_t DesignGrid::size() const {
  std::size_t n = 1;
  for (const auto& v : line_levels) n *= v.size();
  for (const auto& v : station_levels) n *= v.size();
  return n * lambda_levels.size();
}

std::vector<DesignPoint> DesignGrid::expand(const Scenario& scenario) const {
  const int L = scenario.line_count();
  const int S = scenario.station_count();
  const int T = scenario.intervals();
  if (static_cast<int>(line_levels.size()) != L ||
      static_cast<int>(station_levels.size()) != S)
    throw Error("design grid does not match the scenario dimensions");
  std::vector<DesignPoint> out;
  const std::size_t n = size();
  out.reserve(n);
  std::vector<std::size_t> digit(L + S + 1, 0);
  for (std::size_t k = 0; k < n; ++k) {
    DesignPoint d = DesignPoint::zeros_like(scenario);
    for (int l = 0; l < L; ++l)
      for (int t = 0; t < T; ++t) d.x(t, l) = line_levels[l][digit[l]];
    for (int s = 0; s < S; ++s)
      for (int t = 0; t < T; ++t) d.n(t, s) = station_levels[s][digit[L + s]];
    d.lambda() = lambda_levels[digit[L + S]];
    out.push_back(std::move(d));
    // odometer, last dimension fastest
    for (int pos = L + S; pos >= 0; --pos) {
      const std::size_t radix =
          pos < L ? line_levels[pos].size()
                  : pos < L + S ? station_levels[pos - L].size() : lambda_levels.size();
      if (++digit[pos] < radix) break;
      digit[pos] = 0;
    }
  }
  return out;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed) {
        const std::size_t i = next++;
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

OracleResult grid_oracle(const Scenario& scenario, const std::vector<DesignPoint>& points,
                         int jobs) {
  const auto index = classify_legs(scenario);
  OracleResult out;
  out.grid_size = points.size();
  out.objectives.assign(points.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(points.size(), jobs, [&](std::size_t k) {
    if (!check_design_feasibility(scenario, points[k]).empty()) return;
    out.objectives[k] = evaluate_design(scenario, index, points[k]).report.objective;
  });
  int best = -1;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (std::isnan(out.objectives[k])) continue;
    if (best < 0 || out.objectives[k] < out.objectives[best]) best = static_cast<int>(k);
  }
  if (best < 0) throw Error("design grid has no feasible point");
  out.best = points[best];
  out.best_objective = out.objectives[best];
  return out;
}

BoardingOracleResult enumerate_boarding_oracle(const Scenario& scenario,
                                               const LegIndex& index,
                                               const ThetaMatrix& theta,
                                               const DesignPoint& design,
                                               std::size_t limit) {
  const int T = index.intervals;
  const int R = index.route_count();
  const double speed = scenario.utility.amod_speed;

  // per-boarding ceilings from the service alone
  auto ceiling = [&](int r, int i, int t) -> long {
    const auto& leg = index.legs[r][i];
    double cap;
    if (leg.mode == LegMode::kTransit) {
      cap = scenario.lines[leg.line].capacity * design.x(t, leg.line);
    } else {
      cap = availability_ratio(scenario.stations[leg.station], scenario.grid.delta_t, speed) *
            design.n(t, leg.station) / leg.discount;
    }
    return static_cast<long>(std::floor(cap + 1e-9));
  };

  // all integral schedules of each route obeying (6d)/(6e)
  std::vector<std::vector<std::vector<long>>> schedules(R);
  double space = 1.0;
  for (int r = 0; r < R; ++r) {
    const int legs = index.leg_count(r);
    const auto& d = scenario.commutes[index.route_commute[r]].demand;
    std::vector<long> cum_demand(T);
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
      acc += d[t] * theta[r][t];
      cum_demand[t] = static_cast<long>(std::floor(acc + 1e-9));
    }
    std::vector<long> z(legs * T, 0);
    auto& out = schedules[r];
    std::function<void(int, int, long)> rec = [&](int i, int t, long cum) {
      if (t == T) {
        if (i + 1 == legs) {
          out.push_back(z);
          if (out.size() > limit)
            throw Error("boarding search space too large: more than " +
                        std::to_string(limit) + " schedules for one route");
          return;
        }
        rec(i + 1, 0, 0);
        return;
      }
      long cap;
      if (i == 0) {
        cap = cum_demand[t];
      } else {
        const int shift = index.legs[r][i - 1].shift;
        long arrived = 0;
        for (int s = 0; s <= t - shift; ++s) arrived += z[(i - 1) * T + s];
        cap = arrived;
      }
      const long most = std::min(cap - cum, ceiling(r, i, t));
      for (long v = 0; v <= std::max(0L, most); ++v) {
        if (v > most) break;
        z[i * T + t] = v;
        rec(i, t + 1, cum + v);
      }
      z[i * T + t] = 0;
    };
    rec(0, 0, 0);
    space *= static_cast<double>(out.size());
    if (space > static_cast<double>(limit))
      throw Error("boarding search space too large: about " +
                  std::to_string(static_cast<long long>(space)) + " schedules (limit " +
                  std::to_string(limit) + ")");
  }

  BoardingOracleResult best;
  best.objective = std::numeric_limits<double>::infinity();
  best.schedules = static_cast<std::size_t>(space);
  std::vector<std::size_t> pick(R, 0);
  BoardingFlows flows{std::vector<double>(index.flow_count, 0.0)};
  const double ratio_tol = 1e-9;
  while (true) {
    for (int r = 0; r < R; ++r) {
      const auto& s = schedules[r][pick[r]];
      for (int i = 0; i < index.leg_count(r); ++i)
        for (int t = 0; t < T; ++t) flows.z[index.z_index(r, i, t)] = s[i * T + t];
    }
    bool ok = true;
    // vehicle capacity per stop
    for (int l = 0; l < scenario.line_count() && ok; ++l)
      for (const auto& legs : index.through[l])
        for (int t = 0; t < T && ok; ++t) {
          double load = 0.0;
          for (const auto& ref : legs) load += flows.at(index, ref.route, ref.leg, t);
          ok = load <= scenario.lines[l].capacity * design.x(t, l) + ratio_tol;
        }
    // AMoD availability
    for (int s = 0; s < scenario.station_count() && ok; ++s) {
      const double ratio =
          availability_ratio(scenario.stations[s], scenario.grid.delta_t, speed);
      for (int t = 0; t < T && ok; ++t) {
        double used = 0.0;
        for (const auto* set : {&index.direct[s], &index.first_mile[s], &index.last_mile[s]})
          for (const auto& ref : *set)
            used += index.leg(ref).discount * flows.at(index, ref.route, ref.leg, t);
        ok = used <= ratio * design.n(t, s) + ratio_tol;
      }
    }
    // sharing consistency
    for (const auto& members : index.shared_members) {
      if (!ok) break;
      std::vector<std::pair<int, std::vector<double>>> per_commute;
      for (const auto& m : members) {
        const int c = index.route_commute[m.route];
        auto it = std::find_if(per_commute.begin(), per_commute.end(),
                               [&](const auto& e) { return e.first == c; });
        if (it == per_commute.end()) {
          per_commute.emplace_back(c, std::vector<double>(T, 0.0));
          it = per_commute.end() - 1;
        }
        for (int t = 0; t < T; ++t) it->second[t] += flows.at(index, m.route, m.leg, t);
      }
      for (std::size_t k = 1; k < per_commute.size() && ok; ++k)
        for (int t = 0; t < T && ok; ++t)
          ok = std::abs(per_commute[k].second[t] - per_commute[0].second[t]) <= ratio_tol;
    }
    if (ok) {
      const double obj =
          objective_breakdown(scenario, index, flows, theta, design).total();
      if (obj < best.objective - 1e-12) {
        best.objective = obj;
        best.flows = flows;
      }
    }
    int pos = R - 1;
    while (pos >= 0 && ++pick[pos] == schedules[pos].size()) pick[pos--] = 0;
    if (pos < 0) break;
  }
  return best;
}

}  // namespace tcmum
