#include "tcmum/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tcmum/feasibility.hpp"
#include "tcmum/lp/linear_program.hpp"

namespace tcmum {
namespace {

constexpr double kBudgetSlack = 1e-9;

BoardingFlows inner_flows(const Scenario& scenario, const LegIndex& index,
                          const ChoiceModel& choice, const DesignPoint& design) {
  const auto field = choice.field(design);
  const auto inner = build_inner_lp(scenario, index, field.theta, design, true);
  const auto sol = lp::solve_lp(inner.model);
  if (sol.status != lp::Status::kOptimal)
    throw lp::SolverError("inner LP is " + lp::to_string(sol.status));
  return extract_flows(index, sol.x);
}

struct BusVar {
  int t;
  int line;
  std::vector<double> grid;  // candidate values, anchor value first
};

// Closed bus services have no usable gradient; replace it by the change in
// theta when the service opens with one departure.
void add_bus_secants(AffineTheta& theta_hat, const Scenario& scenario, const LegIndex& index,
                     const ChoiceModel& choice, const std::vector<BusVar>& bus) {
  const auto& anchor = theta_hat.anchor();
  std::vector<std::vector<int>> commutes_of_line(scenario.line_count());
  for (int c = 0; c < index.commute_count(); ++c)
    for (int r : index.routes_of_commute[c])
      for (const auto& leg : index.legs[r])
        if (leg.mode == LegMode::kTransit) {
          auto& v = commutes_of_line[leg.line];
          if (v.empty() || v.back() != c) v.push_back(c);
        }
  std::vector<char> touched(index.route_count() * index.intervals, 0);
  for (const auto& b : bus) {
    if (anchor.x(b.t, b.line) != 0.0) continue;
    const double open = *std::max_element(b.grid.begin(), b.grid.end());
    if (open <= 0.0) continue;
    DesignPoint probe = anchor;
    probe.x(b.t, b.line) = open;
    const int id = anchor.x_id(b.t, b.line);
    for (int c : commutes_of_line[b.line]) {
      std::vector<double> p;
      try {
        p = choice.probabilities(c, b.t, probe);
      } catch (const Error&) {
        continue;
      }
      const auto& routes = index.routes_of_commute[c];
      for (std::size_t k = 0; k < routes.size(); ++k) {
        const double diff = (p[k] - theta_hat.constant(routes[k], b.t)) / open;
        if (diff == 0.0) continue;
        theta_hat.slope(routes[k], b.t).emplace_back(id, diff);
        touched[routes[k] * index.intervals + b.t] = 1;
      }
    }
  }
  for (int r = 0; r < index.route_count(); ++r)
    for (int t = 0; t < index.intervals; ++t)
      if (touched[r * index.intervals + t]) {
        auto& g = theta_hat.slope(r, t);
        std::sort(g.begin(), g.end());
      }
}

struct LpStep {
  DesignPoint design;
  double q = 0.0;
};

LpStep solve_step(const Scenario& scenario, const LegIndex& index, const ChoiceModel& choice,
                  const DesignPoint& anchor, const std::vector<BusVar>& bus, bool fix_bus,
                  const BoardingFlows* flows) {
  auto theta_hat = linearize_theta(choice, anchor, GradientPolicy::kLimit);
  if (!fix_bus) add_bus_secants(theta_hat, scenario, index, choice, bus);
  IterationLpOptions options;
  options.fix_bus = fix_bus;
  options.linearize_wait_terms = scenario.algorithm.linearize_wait_terms;
  const auto step = build_iteration_lp(scenario, index, theta_hat, options, flows);
  const auto sol = lp::solve_lp(step.model);
  if (sol.status != lp::Status::kOptimal)
    throw lp::SolverError("step LP is " + lp::to_string(sol.status));
  return {extract_design(step, sol.x, anchor), sol.objective};
}

double bus_cost(const Scenario& scenario, const std::vector<BusVar>& bus,
                const std::vector<double>& values) {
  double cost = 0.0;
  for (std::size_t k = 0; k < bus.size(); ++k)
    cost += scenario.lines[bus[k].line].cost_per_departure * values[k];
  return cost;
}

}  // namespace

StepResult first_order_step(const Scenario& scenario, const LegIndex& index,
                            const DesignPoint& anchor, const BoardingFlows* anchor_flows) {
  const auto& alg = scenario.algorithm;
  const ChoiceModel choice(scenario, index);
  StepResult out;

  const bool linearize = alg.linearize_wait_terms;
  std::optional<BoardingFlows> own_flows;
  if (linearize && !anchor_flows) {
    own_flows = inner_flows(scenario, index, choice, anchor);
    ++out.lp_solves;
    anchor_flows = &*own_flows;
  }
  auto flows_at = [&](const DesignPoint& d) -> std::optional<BoardingFlows> {
    if (!linearize) return std::nullopt;
    ++out.lp_solves;
    return inner_flows(scenario, index, choice, d);
  };

  // integer grid of each bus rate inside its trust region
  std::vector<BusVar> bus;
  double space = 1.0;
  const double ub = scenario.budgets.bus_max_rate;
  for (int t = 0; t < index.intervals; ++t) {
    for (int l = 0; l < scenario.line_count(); ++l) {
      if (scenario.lines[l].kind != LineKind::kBus) continue;
      const double x0 = anchor.x(t, l);
      BusVar b{t, l, {x0}};
      const double lo = std::max(0.0, x0 - alg.rho_bus);
      const double hi = std::min(ub, x0 + alg.rho_bus);
      for (double k = std::ceil(lo - 1e-9); k <= hi + 1e-9; k += 1.0)
        if (k != x0) b.grid.push_back(k);
      space *= static_cast<double>(b.grid.size());
      bus.push_back(std::move(b));
    }
  }
  std::vector<double> current(bus.size());
  for (std::size_t k = 0; k < bus.size(); ++k) current[k] = bus[k].grid[0];
  auto with_bus = [&](const std::vector<double>& values) {
    DesignPoint d = anchor;
    for (std::size_t k = 0; k < bus.size(); ++k) d.x(bus[k].t, bus[k].line) = values[k];
    return d;
  };

  if (space <= static_cast<double>(alg.bus_enumeration_limit)) {
    bool have = false;
    std::vector<std::size_t> pick(bus.size(), 0);
    while (true) {
      std::vector<double> values(bus.size());
      for (std::size_t k = 0; k < bus.size(); ++k) values[k] = bus[k].grid[pick[k]];
      if (bus_cost(scenario, bus, values) <= scenario.budgets.bus_budget + kBudgetSlack ||
          values == current) {
        const auto d = with_bus(values);
        std::optional<BoardingFlows> f;
        if (values != current) f = flows_at(d);
        const auto step = solve_step(scenario, index, choice, d, bus, true,
                                     values == current ? anchor_flows : (f ? &*f : nullptr));
        ++out.lp_solves;
        if (!have || step.q < out.q_tilde) {
          out.design = step.design;
          out.q_tilde = step.q;
          have = true;
        }
      }
      std::size_t pos = 0;
      while (pos < bus.size() && ++pick[pos] == bus[pos].grid.size()) pick[pos++] = 0;
      if (pos == bus.size()) break;
    }
    return out;
  }

  // relax, round to the grid within budget, re-solve with buses fixed
  const auto relaxed = solve_step(scenario, index, choice, anchor, bus, false, anchor_flows);
  ++out.lp_solves;
  std::vector<double> rounded(bus.size());
  std::vector<double> raw(bus.size());
  for (std::size_t k = 0; k < bus.size(); ++k) {
    raw[k] = relaxed.design.x(bus[k].t, bus[k].line);
    rounded[k] = *std::min_element(bus[k].grid.begin(), bus[k].grid.end(),
                                   [&](double a, double b) {
                                     return std::abs(a - raw[k]) < std::abs(b - raw[k]);
                                   });
  }
  while (bus_cost(scenario, bus, rounded) > scenario.budgets.bus_budget + kBudgetSlack) {
    // undo the least justified upward rounding
    int worst = -1;
    double worst_gap = 0.0;
    double next = 0.0;
    for (std::size_t k = 0; k < bus.size(); ++k) {
      double below = -1.0;
      for (double g : bus[k].grid)
        if (g < rounded[k] && g > below) below = g;
      if (below < 0.0) continue;
      const double gap = rounded[k] - raw[k];
      if (worst < 0 || gap > worst_gap) {
        worst = static_cast<int>(k);
        worst_gap = gap;
        next = below;
      }
    }
    if (worst < 0) {
      rounded = current;
      break;
    }
    rounded[worst] = next;
  }

  const auto stay = solve_step(scenario, index, choice, anchor, bus, true, anchor_flows);
  ++out.lp_solves;
  out.design = stay.design;
  out.q_tilde = stay.q;
  if (rounded != current) {
    const auto d = with_bus(rounded);
    const auto f = flows_at(d);
    const auto move = solve_step(scenario, index, choice, d, bus, true, f ? &*f : nullptr);
    ++out.lp_solves;
    if (move.q < out.q_tilde) {
      out.design = move.design;
      out.q_tilde = move.q;
    }
  }
  return out;
}

StepResult first_order_step(const Scenario& scenario, const DesignPoint& anchor,
                            const OptimizerParams& params) {
  Scenario s = scenario;
  s.algorithm = params;
  const auto index = classify_legs(s);
  return first_order_step(s, index, anchor);
}

Trajectory optimize(const Scenario& scenario, const LegIndex& index, const DesignPoint& start) {
  const auto violations = check_design_feasibility(scenario, start);
  if (!violations.empty())
    throw Error("start design is infeasible: " + violations.front().message());
  const auto& alg = scenario.algorithm;
  Trajectory out;
  out.start = start;
  auto ev = evaluate_design(scenario, index, start);
  out.start_objective = ev.report.objective;

  DesignPoint anchor = start;
  double q_prev = 0.0;
  for (int i = 1; i <= alg.max_iterations; ++i) {
    StepResult step;
    try {
      step = first_order_step(scenario, index, anchor, &ev.flows);
    } catch (const lp::SolverError& e) {
      throw lp::SolverError("iteration " + std::to_string(i) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("iteration " + std::to_string(i) + ": " + e.what());
    }
    Iterate it;
    it.design = step.design;
    it.q_tilde = step.q_tilde;
    it.violations = static_cast<int>(check_design_feasibility(scenario, it.design).size());
    if (it.violations > 0)
      throw Error("iteration " + std::to_string(i) + " left the feasible set");
    ev = evaluate_design(scenario, index, it.design);
    it.true_objective = ev.report.objective;
    it.threshold = std::abs(step.q_tilde - q_prev);
    q_prev = step.q_tilde;
    anchor = it.design;
    out.iterates.push_back(std::move(it));
    if (out.iterates.back().threshold <= alg.epsilon) {
      out.converged = true;
      break;
    }
  }
  return out;
}

Trajectory optimize(const Scenario& scenario, const DesignPoint& start) {
  const auto index = classify_legs(scenario);
  return optimize(scenario, index, start);
}

DesignPoint random_start(const Scenario& scenario, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& b = scenario.budgets;
  const int T = scenario.intervals();
  const int L = scenario.line_count();
  const int S = scenario.station_count();
  DesignPoint d = DesignPoint::zeros_like(scenario);

  const double bus_top = std::floor(b.bus_max_rate + 1e-9);
  double rail_cost = 0.0, rail_floor = 0.0, bus_cost_total = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int l = 0; l < L; ++l) {
      const auto& line = scenario.lines[l];
      if (line.kind == LineKind::kRail) {
        d.x(t, l) = b.rail_min_rate + unit(rng) * (b.rail_max_rate - b.rail_min_rate);
        rail_cost += line.cost_per_departure * d.x(t, l);
        rail_floor += line.cost_per_departure * b.rail_min_rate;
      } else {
        d.x(t, l) = std::min(std::floor(unit(rng) * (bus_top + 1.0)), bus_top);
        bus_cost_total += line.cost_per_departure * d.x(t, l);
      }
    }
  }
  const double rail_scale =
      rail_cost > b.rail_budget && rail_cost > rail_floor
          ? std::max(0.0, (b.rail_budget - rail_floor) / (rail_cost - rail_floor))
          : 1.0;
  const double bus_scale = bus_cost_total > b.bus_budget ? b.bus_budget / bus_cost_total : 1.0;
  for (int t = 0; t < T; ++t) {
    for (int l = 0; l < L; ++l) {
      if (scenario.lines[l].kind == LineKind::kRail) {
        d.x(t, l) = b.rail_min_rate + (d.x(t, l) - b.rail_min_rate) * rail_scale;
      } else if (bus_scale < 1.0) {
        d.x(t, l) = std::floor(d.x(t, l) * bus_scale);
      }
    }
  }

  std::gamma_distribution<double> dirichlet(1.0, 1.0);
  for (int t = 0; t < T; ++t) {
    const double total = unit(rng) * b.fleet_size;
    std::vector<double> w(S);
    double sum = 0.0;
    for (auto& v : w) sum += (v = dirichlet(rng));
    for (int s = 0; s < S; ++s) d.n(t, s) = sum > 0.0 ? total * w[s] / sum : 0.0;
  }
  const auto& f = scenario.fares;
  d.lambda() = f.lambda_min + unit(rng) * (f.lambda_max - f.lambda_min);
  return d;
}

MultiStartResult multi_start(const Scenario& scenario, int jobs) {
  const auto index = classify_legs(scenario);
  const int starts = std::max(1, scenario.algorithm.starts);
  MultiStartResult out;
  out.trajectories.resize(starts);
  parallel_for(starts, jobs, [&](std::size_t k) {
    const auto start = random_start(scenario, scenario.algorithm.seed + k);
    out.trajectories[k] = optimize(scenario, index, start);
  });
  for (int k = 0; k < starts; ++k) {
    const double obj = out.trajectories[k].final_objective();
    if (k == 0 || obj < out.best_objective) {
      out.best_objective = obj;
      out.best_start = k;
    }
  }
  out.best = out.trajectories[out.best_start].final_design();
  return out;
}

}  // namespace tcmum
