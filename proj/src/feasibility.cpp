#include "tcmum/feasibility.hpp"

#include <cmath>
#include <sstream>

namespace tcmum {

std::string DesignViolation::message() const {
  std::ostringstream out;
  out << constraint << " exceeded by " << excess;
  return out.str();
}

std::vector<DesignViolation> check_design_feasibility(const Scenario& scenario,
                                                      const DesignPoint& design,
                                                      double tolerance) {
  const int T = scenario.intervals();
  const int L = scenario.line_count();
  const int S = scenario.station_count();
  if (design.intervals() != T || design.lines() != L || design.stations() != S)
    throw Error("design dimensions do not match the scenario");

  std::vector<DesignViolation> out;
  auto report = [&](std::string what, double excess) {
    if (excess > tolerance) out.push_back({std::move(what), excess});
  };
  const auto& b = scenario.budgets;
  double bus_used = 0.0;
  double rail_used = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int l = 0; l < L; ++l) {
      const auto& line = scenario.lines[l];
      const double x = design.x(t, l);
      const std::string cell =
          "x[" + line.id + "][t=" + std::to_string(t) + "]";
      if (!std::isfinite(x)) {
        out.push_back({cell + " finite", INFINITY});
        continue;
      }
      report(cell + " nonnegativity", -x);
      if (line.kind == LineKind::kRail) {
        rail_used += line.cost_per_departure * x;
        report(cell + " rail lower bound", b.rail_min_rate - x);
        report(cell + " rail upper bound", x - b.rail_max_rate);
      } else {
        bus_used += line.cost_per_departure * x;
        report(cell + " bus upper bound", x - b.bus_max_rate);
      }
    }
    double fleet = 0.0;
    for (int s = 0; s < S; ++s) {
      const double n = design.n(t, s);
      report("N[" + scenario.stations[s].station_id + "][t=" +
                 std::to_string(t) + "] nonnegativity",
             -n);
      fleet += n;
    }
    report("fleet size N_bar at t=" + std::to_string(t), fleet - b.fleet_size);
  }
  report("bus budget", bus_used - b.bus_budget);
  report("rail budget", rail_used - b.rail_budget);
  report("lambda lower bound", scenario.fares.lambda_min - design.lambda());
  report("lambda upper bound", design.lambda() - scenario.fares.lambda_max);
  return out;
}

std::vector<std::vector<long long>> round_allocation(
    const std::vector<std::vector<double>>& allocation) {
  std::vector<std::vector<long long>> out;
  out.reserve(allocation.size());
  for (const auto& row : allocation) {
    auto& r = out.emplace_back();
    r.reserve(row.size());
    for (double v : row) r.push_back(static_cast<long long>(std::floor(v)));
  }
  return out;
}

DesignPoint round_allocation(const DesignPoint& design) {
  DesignPoint out = design;
  for (int t = 0; t < design.intervals(); ++t)
    for (int s = 0; s < design.stations(); ++s)
      out.n(t, s) = std::floor(design.n(t, s));
  return out;
}

}  // namespace tcmum
