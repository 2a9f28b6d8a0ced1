#include "tcmum/leg_index.hpp"

#include "tcmum/units.hpp"

namespace tcmum {
namespace {

int position_of(const TransitLine& line, const std::string& stop, int from) {
  for (int p = from; p < static_cast<int>(line.stops.size()); ++p)
    if (line.stops[p] == stop) return p;
  return -1;
}

}  // namespace

LegIndex classify_legs(const Scenario& scenario) {
  LegIndex index;
  const int T = scenario.intervals();
  index.intervals = T;
  index.line_count = scenario.line_count();
  index.station_count = scenario.station_count();

  index.routes_of_commute.resize(scenario.commutes.size());
  for (const auto& line : scenario.lines) {
    const auto stops = line.stops.size();
    index.first_boarding.emplace_back(stops);
    index.transfer.emplace_back(stops);
    index.boarding.emplace_back(stops);
    index.through.emplace_back(stops);
  }
  index.direct.resize(scenario.stations.size());
  index.first_mile.resize(scenario.stations.size());
  index.last_mile.resize(scenario.stations.size());
  index.shared_members.resize(scenario.shared_trips.size());

  int offset = 0;
  for (int r = 0; r < static_cast<int>(scenario.routes.size()); ++r) {
    const auto& route = scenario.routes[r];
    const int c = scenario.find_commute(route.commute);
    if (c < 0) throw Error("route '" + route.id + "' references unknown commute '" +
                           route.commute + "'");
    const auto kind = scenario.commutes[c].kind;
    index.route_commute.push_back(c);
    index.routes_of_commute[c].push_back(r);
    index.route_offset.push_back(offset);
    offset += static_cast<int>(route.legs.size()) * T;

    auto& resolved = index.legs.emplace_back();
    auto& transit = index.transit_legs.emplace_back();
    auto& amod = index.amod_legs.emplace_back();
    for (int i = 0; i < static_cast<int>(route.legs.size()); ++i) {
      const auto& leg = route.legs[i];
      ResolvedLeg out;
      out.mode = leg.mode;
      out.discount = leg.vehicle_discount;
      out.distance_km = leg.distance_km;
      out.travel_min = leg.travel_min;
      out.shift = units::interval_shift(leg.travel_min, scenario.grid.delta_t);
      const LegRef ref{r, i};
      if (leg.mode == LegMode::kTransit) {
        out.line = scenario.find_line(leg.line);
        if (out.line < 0) throw Error("unknown line '" + leg.line + "'");
        const auto& line = scenario.lines[out.line];
        out.board_pos = position_of(line, leg.board_stop, 0);
        if (out.board_pos < 0)
          throw Error("route '" + route.commute + "/" + route.id +
                      "': transfer stop '" + leg.board_stop +
                      "' is not on line '" + line.id + "'");
        out.alight_pos = position_of(line, leg.alight_stop, out.board_pos + 1);
        if (out.alight_pos < 0)
          throw Error("route '" + route.commute + "/" + route.id +
                      "': transfer stop '" + leg.alight_stop +
                      "' is not on line '" + line.id + "' after '" +
                      leg.board_stop + "'");
        transit.push_back(i);
        auto& at_line = index.boarding[out.line];
        at_line[out.board_pos].push_back(ref);
        (i == 0 ? index.first_boarding : index.transfer)[out.line][out.board_pos]
            .push_back(ref);
        for (int p = out.board_pos; p < out.alight_pos; ++p)
          index.through[out.line][p].push_back(ref);
      } else {
        out.station = scenario.find_station(leg.station);
        if (out.station < 0) throw Error("unknown station '" + leg.station + "'");
        if (i > 0) {
          out.role = AmodRole::kLastMile;
          index.last_mile[out.station].push_back(ref);
        } else if (kind == CommuteKind::kLocal) {
          out.role = AmodRole::kDirect;
          index.direct[out.station].push_back(ref);
        } else {
          out.role = AmodRole::kFirstMile;
          index.first_mile[out.station].push_back(ref);
        }
        amod.push_back(i);
      }
      resolved.push_back(out);
    }
  }
  index.flow_count = offset;

  for (int p = 0; p < static_cast<int>(scenario.shared_trips.size()); ++p) {
    for (const auto& m : scenario.shared_trips[p].members) {
      const int r = scenario.find_route(m.commute, m.route);
      if (r < 0) throw Error("shared trip '" + scenario.shared_trips[p].id +
                             "' references unknown route");
      index.shared_members[p].push_back({r, m.leg});
      index.legs[r][m.leg].shared_trip = p;
    }
  }
  return index;
}

}  // namespace tcmum
