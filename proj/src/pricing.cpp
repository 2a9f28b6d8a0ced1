#include "tcmum/pricing.hpp"

#include <algorithm>
#include <cmath>

#include "tcmum/units.hpp"

namespace tcmum {

double amod_fare(const FareSchedule& fares, double distance_km, double travel_min) {
  const double raw = fares.f_base + fares.f_book +
                     fares.per_mile * units::km_to_miles(distance_km) +
                     fares.per_minute * travel_min;
  return std::max(raw, fares.f_min);
}

double transit_wait_min(double delta_t, double departures) {
  return delta_t / (2.0 * departures);
}

double mean_local_trip_min(const StationRegion& station, double speed_mph) {
  return units::travel_minutes(station.mean_local_trip_km(), speed_mph);
}

double amod_wait_min(const StationRegion& station, double vehicles,
                     double speed_mph) {
  return mean_local_trip_min(station, speed_mph) / std::sqrt(vehicles);
}

double availability_ratio(const StationRegion& station, double delta_t,
                          double speed_mph) {
  return delta_t / mean_local_trip_min(station, speed_mph);
}

double route_price(const Scenario& scenario, const CommuteRoute& route,
                   double lambda) {
  const bool has_amod = std::any_of(route.legs.begin(), route.legs.end(), [](const Leg& l) {
    return l.mode == LegMode::kAmod;
  });
  double price = 0.0;
  bool first_transit = !has_amod;
  for (const auto& leg : route.legs) {
    if (leg.mode == LegMode::kAmod) {
      price += lambda * amod_fare(scenario.fares, leg.distance_km, leg.travel_min);
      continue;
    }
    const int l = scenario.find_line(leg.line);
    const double fare = l >= 0 ? scenario.lines[l].fare : scenario.fares.transit_fare;
    price += first_transit ? fare : scenario.fares.transfer_discount * fare;
    first_transit = false;
  }
  return price;
}

UtilityModel::UtilityModel(const Scenario& scenario, const LegIndex& index)
    : delta_t_(scenario.grid.delta_t),
      beta_transit_(units::per_minute(scenario.utility.beta_time_transit)),
      beta_amod_(units::per_minute(scenario.utility.beta_time_amod)),
      beta_money_(scenario.utility.beta_money) {
  const double speed = scenario.utility.amod_speed;
  for (int r = 0; r < index.route_count(); ++r) {
    const auto& route = scenario.routes[r];
    RouteData data;
    data.walk_min = route.walk_min;
    data.transit_price = route_price(scenario, route, 0.0);
    for (int i = 0; i < index.leg_count(r); ++i) {
      const auto& leg = index.legs[r][i];
      if (leg.mode == LegMode::kTransit) {
        data.transit.push_back({leg.line, leg.travel_min});
      } else {
        const double fare = amod_fare(scenario.fares, leg.distance_km, leg.travel_min);
        data.amod_fare_total += fare;
        data.amod.push_back({leg.station, leg.travel_min, fare,
                             mean_local_trip_min(scenario.stations[leg.station], speed)});
      }
    }
    routes_.push_back(std::move(data));
  }
}

bool UtilityModel::available(int route, int t, const DesignPoint& design) const {
  const auto& data = routes_[route];
  for (const auto& p : data.transit)
    if (!(design.x(t, p.line) > 0.0)) return false;
  for (const auto& p : data.amod)
    if (!(design.n(t, p.station) > 0.0)) return false;
  return true;
}

double UtilityModel::price(int route, double lambda) const {
  return routes_[route].transit_price + lambda * routes_[route].amod_fare_total;
}

double UtilityModel::utility(int route, int t, const DesignPoint& design) const {
  if (!available(route, t, design)) return kUnavailable;
  const auto& data = routes_[route];
  double transit_min = data.walk_min;
  for (const auto& p : data.transit)
    transit_min += transit_wait_min(delta_t_, design.x(t, p.line)) + p.travel_min;
  double amod_min = 0.0;
  for (const auto& p : data.amod)
    amod_min += p.wait_coeff / std::sqrt(design.n(t, p.station)) + p.travel_min;
  return -beta_money_ * price(route, design.lambda()) - beta_transit_ * transit_min -
         beta_amod_ * amod_min;
}

SparseGrad UtilityModel::utility_gradient(int route, int t,
                                          const DesignPoint& design) const {
  const auto& data = routes_[route];
  SparseGrad g;
  for (const auto& p : data.transit) {
    const double x = design.x(t, p.line);
    g.emplace_back(design.x_id(t, p.line), beta_transit_ * delta_t_ / (2.0 * x * x));
  }
  for (const auto& p : data.amod) {
    const double n = design.n(t, p.station);
    g.emplace_back(design.n_id(t, p.station),
                   beta_amod_ * 0.5 * p.wait_coeff / (n * std::sqrt(n)));
  }
  if (data.amod_fare_total != 0.0)
    g.emplace_back(design.lambda_id(), -beta_money_ * data.amod_fare_total);

  std::sort(g.begin(), g.end());
  SparseGrad merged;
  for (const auto& [id, v] : g) {
    if (!merged.empty() && merged.back().first == id)
      merged.back().second += v;
    else
      merged.emplace_back(id, v);
  }
  return merged;
}

double route_utility(const Scenario& scenario, int route, int t,
                     const DesignPoint& design) {
  const auto index = classify_legs(scenario);
  return UtilityModel(scenario, index).utility(route, t, design);
}

}  // namespace tcmum
