#pragma once

// Fares, expected waits and route utilities.

#include <limits>
#include <utility>
#include <vector>

#include "tcmum/leg_index.hpp"
#include "tcmum/model.hpp"

namespace tcmum {

// Utility of a route that cannot be taken at the given interval.
inline constexpr double kUnavailable = -std::numeric_limits<double>::infinity();

// TNC-style fare: max(base + booking + per-mile + per-minute, minimum).
double amod_fare(const FareSchedule& fares, double distance_km, double travel_min);

// Half headway, minutes. Requires x > 0.
double transit_wait_min(double delta_t, double departures);
// Mean local AMoD trip time alpha*sqrt(A) / v, minutes.
double mean_local_trip_min(const StationRegion& station, double speed_mph);
// Expected AMoD wait (alpha / v) * sqrt(A / N), minutes. Requires N > 0.
double amod_wait_min(const StationRegion& station, double vehicles, double speed_mph);
// Fraction of an interval each vehicle is free: delta_t / E[T].
double availability_ratio(const StationRegion& station, double delta_t,
                          double speed_mph);

double route_price(const Scenario& scenario, const CommuteRoute& route,
                   double lambda);

// Sparse derivative: sorted (design variable id, value) pairs.
using SparseGrad = std::vector<std::pair<int, double>>;

// Precomputed per-route attributes so utilities and their derivatives can be
// evaluated cheaply for many designs.
class UtilityModel {
 public:
  UtilityModel(const Scenario& scenario, const LegIndex& index);

  // Systematic utility in dollars, or kUnavailable when a used line has no
  // departures or a used station has no vehicles at t.
  double utility(int route, int t, const DesignPoint& design) const;
  // Gradient of the utility w.r.t. the design; requires the route available.
  SparseGrad utility_gradient(int route, int t, const DesignPoint& design) const;
  double price(int route, double lambda) const;
  bool available(int route, int t, const DesignPoint& design) const;

  int route_count() const { return static_cast<int>(routes_.size()); }

 private:
  struct TransitPart {
    int line;
    double travel_min;
  };
  struct AmodPart {
    int station;
    double travel_min;
    double fare;
    double wait_coeff;  // minutes * sqrt(vehicle)
  };
  struct RouteData {
    std::vector<TransitPart> transit;
    std::vector<AmodPart> amod;
    double walk_min = 0.0;
    double transit_price = 0.0;
    double amod_fare_total = 0.0;
  };
  std::vector<RouteData> routes_;
  double delta_t_;
  double beta_transit_;  // $/min
  double beta_amod_;     // $/min
  double beta_money_;
};

// Convenience wrapper for a single evaluation.
double route_utility(const Scenario& scenario, int route, int t,
                     const DesignPoint& design);

}  // namespace tcmum
