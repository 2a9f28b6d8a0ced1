#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "tcmum/io.hpp"
#include "tcmum/model.hpp"

namespace fixtures {

using namespace tcmum;

inline std::string scenario_path(const std::string& name) {
  return std::string(TCMUM_SOURCE_DIR) + "/scenarios/" + name;
}

inline Leg transit(const std::string& line, const std::string& from, const std::string& to,
                   double minutes = 0.0) {
  Leg leg;
  leg.mode = LegMode::kTransit;
  leg.line = line;
  leg.board_stop = from;
  leg.alight_stop = to;
  leg.travel_min = minutes;
  return leg;
}

inline Leg amod(const std::string& station, double km = 2.0, double minutes = 6.0) {
  Leg leg;
  leg.mode = LegMode::kAmod;
  leg.station = station;
  leg.distance_km = km;
  leg.travel_min = minutes;
  return leg;
}

inline CommuteRoute route(const std::string& commute, const std::string& id,
                          std::vector<Leg> legs, double walk = 0.0) {
  CommuteRoute r;
  r.commute = commute;
  r.id = id;
  r.legs = std::move(legs);
  r.walk_min = walk;
  bool t = false, a = false;
  for (const auto& leg : r.legs) (leg.mode == LegMode::kTransit ? t : a) = true;
  r.mode_class = t && a ? ModeClass::kMixed : a ? ModeClass::kAmod : ModeClass::kTransit;
  return r;
}

inline TransitLine line(const std::string& id, LineKind kind, std::vector<std::string> stops,
                        double capacity, double segment = 0.0) {
  TransitLine l;
  l.id = id;
  l.kind = kind;
  l.segment_times.assign(stops.size() - 1, segment);
  l.stops = std::move(stops);
  l.capacity = capacity;
  l.fare = 2.5;
  return l;
}

inline StationRegion station(const std::string& id = "S") {
  StationRegion s;
  s.station_id = id;
  s.area = 90.0;
  s.shape_coeff = 0.667;
  s.location = Point{0.0, 0.0};
  return s;
}

inline Scenario empty_scenario(int T, double delta = 5.0) {
  Scenario s;
  s.grid.intervals = T;
  s.grid.delta_t = delta;
  s.grid.t_start = "07:00";
  const int end = 7 * 60 + static_cast<int>(T * delta);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02d:%02d", end / 60, end % 60);
  s.grid.t_end = buf;
  s.budgets.bus_budget = 100;
  s.budgets.rail_budget = 100;
  s.budgets.rail_min_rate = 0.0;
  s.budgets.rail_max_rate = 2.5;
  s.budgets.bus_max_rate = 2;
  s.budgets.fleet_size = 0;
  return s;
}

inline Commute commute(const std::string& id, CommuteKind kind, std::vector<double> demand) {
  Commute c;
  c.id = id;
  c.kind = kind;
  c.demand = std::move(demand);
  return c;
}

// One bus line A -> B, one local commute with a single bus route.
inline Scenario single_bus(int T, std::vector<double> demand, double capacity = 50.0) {
  Scenario s = empty_scenario(T);
  s.lines.push_back(line("B1", LineKind::kBus, {"A", "B"}, capacity));
  s.commutes.push_back(commute("c1", CommuteKind::kLocal, std::move(demand)));
  s.routes.push_back(route("c1", "bus", {transit("B1", "A", "B")}));
  return s;
}

// Bus + rail + one AMoD station with local and downtown commutes.
inline Scenario mixed(int T = 3) {
  Scenario s = empty_scenario(T);
  s.lines.push_back(line("B1", LineKind::kBus, {"P", "Q", "S"}, 20.0, 4.0));
  s.lines.push_back(line("R1", LineKind::kRail, {"S", "D"}, 200.0, 15.0));
  s.stations.push_back(station());
  s.budgets.rail_min_rate = 0.5;
  s.budgets.fleet_size = 30;
  std::vector<double> d(T, 3.0);
  s.commutes.push_back(commute("loc", CommuteKind::kLocal, d));
  s.commutes.push_back(commute("dt", CommuteKind::kDowntown, d));
  s.routes.push_back(route("loc", "bus", {transit("B1", "P", "S", 8.0)}, 2.0));
  s.routes.push_back(route("loc", "amod", {amod("S", 3.0, 7.0)}));
  s.routes.push_back(route("dt", "bus_rail", {transit("B1", "Q", "S", 4.0), transit("R1", "S", "D", 15.0)}, 3.0));
  s.routes.push_back(route("dt", "amod_rail", {amod("S", 3.0, 7.0), transit("R1", "S", "D", 15.0)}));
  s.routes.push_back(route("dt", "rail", {transit("R1", "S", "D", 15.0)}, 18.0));
  return s;
}

// Interior design for `mixed`: every service open.
inline DesignPoint open_design(const Scenario& s, double bus = 1.0, double rail = 1.5,
                               double n = 10.0, double lambda = 0.6) {
  DesignPoint d = DesignPoint::zeros_like(s, lambda);
  for (int t = 0; t < s.intervals(); ++t) {
    for (int l = 0; l < s.line_count(); ++l)
      d.x(t, l) = s.lines[l].kind == LineKind::kRail ? rail : bus;
    for (int k = 0; k < s.station_count(); ++k) d.n(t, k) = n;
  }
  return d;
}

}  // namespace fixtures
