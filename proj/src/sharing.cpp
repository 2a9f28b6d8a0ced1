#include "tcmum/sharing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tcmum/units.hpp"

namespace tcmum {
namespace {

double distance(const Point& a, const Point& b) {
  return std::hypot(a.x_km - b.x_km, a.y_km - b.y_km);
}

double seconds(double km, double speed_mph) {
  return units::travel_minutes(km, speed_mph) * 60.0;
}

bool better(const PairTiming& a, const PairTiming& b) {
  return std::max(a.wait_s, a.delay_s) < std::max(b.wait_s, b.delay_s);
}

struct Candidate {
  int route;
  int leg;
  int commute;
  Point where;
  bool first_mile;
};

}  // namespace

PairTiming first_mile_pair(const Point& a, const Point& b, const Point& station,
                           double speed_mph) {
  // Pick up `first`, drive to `second`, then to the station. The second
  // rider waits for the detour leg; the first rides the detour.
  auto order = [&](const Point& first, const Point& second) {
    const double hop = seconds(distance(first, second), speed_mph);
    const double detour = seconds(distance(first, second) + distance(second, station) -
                                      distance(first, station),
                                  speed_mph);
    return PairTiming{hop, std::max(detour, hop)};
  };
  const auto ab = order(a, b);
  const auto ba = order(b, a);
  return better(ba, ab) ? ba : ab;
}

PairTiming last_mile_pair(const Point& a, const Point& b, const Point& station,
                          double speed_mph) {
  auto order = [&](const Point& first, const Point& second) {
    const double detour = seconds(distance(station, first) + distance(first, second) -
                                      distance(station, second),
                                  speed_mph);
    return PairTiming{0.0, detour};
  };
  const auto ab = order(a, b);
  const auto ba = order(b, a);
  return better(ba, ab) ? ba : ab;
}

SharingScenarios generate_sharing_scenarios(const Scenario& scenario,
                                            const std::string& station_id,
                                            double max_wait_s,
                                            double max_delay_s,
                                            int max_parties) {
  if (max_parties != 2)
    throw std::invalid_argument("only two-party sharing is supported");
  SharingScenarios out;
  out.routes = scenario.routes;
  const int s = scenario.find_station(station_id);
  if (s < 0) throw Error("unknown station '" + station_id + "'");
  const auto& station = scenario.stations[s];
  if (!station.location) return out;

  std::vector<Candidate> candidates;
  for (int r = 0; r < static_cast<int>(scenario.routes.size()); ++r) {
    const auto& route = scenario.routes[r];
    const int c = scenario.find_commute(route.commute);
    if (c < 0) continue;
    const auto& commute = scenario.commutes[c];
    for (int i = 0; i < static_cast<int>(route.legs.size()); ++i) {
      const auto& leg = route.legs[i];
      if (leg.mode != LegMode::kAmod || leg.station != station_id ||
          leg.shared_trip_id)
        continue;
      const bool first_mile =
          i == 0 && commute.kind == CommuteKind::kDowntown && route.legs.size() > 1;
      const bool last_mile = i > 0;
      if (first_mile && commute.origin)
        candidates.push_back({r, i, c, *commute.origin, true});
      else if (last_mile && commute.destination)
        candidates.push_back({r, i, c, *commute.destination, false});
    }
  }

  int next_id = 1;
  for (std::size_t a = 0; a < candidates.size(); ++a) {
    for (std::size_t b = a + 1; b < candidates.size(); ++b) {
      const auto& ca = candidates[a];
      const auto& cb = candidates[b];
      if (ca.first_mile != cb.first_mile || ca.commute == cb.commute) continue;
      const auto timing =
          ca.first_mile
              ? first_mile_pair(ca.where, cb.where, *station.location,
                                scenario.utility.amod_speed)
              : last_mile_pair(ca.where, cb.where, *station.location,
                               scenario.utility.amod_speed);
      if (timing.wait_s > max_wait_s || timing.delay_s > max_delay_s) continue;

      SharedTrip trip;
      trip.id = station_id + "#" + std::to_string(next_id++);
      for (const auto* member : {&ca, &cb}) {
        CommuteRoute variant = scenario.routes[member->route];
        variant.id += "+" + trip.id;
        variant.legs[member->leg].shared_trip_id = trip.id;
        variant.legs[member->leg].vehicle_discount = 0.5;
        trip.members.push_back({variant.commute, variant.id, member->leg});
        out.routes.push_back(std::move(variant));
      }
      out.trips.push_back(std::move(trip));
    }
  }
  return out;
}

Scenario with_sharing(const Scenario& scenario, const SharingScenarios& sharing) {
  Scenario out = scenario;
  out.routes = sharing.routes;
  out.shared_trips.insert(out.shared_trips.end(), sharing.trips.begin(),
                          sharing.trips.end());
  return out;
}

}  // namespace tcmum
