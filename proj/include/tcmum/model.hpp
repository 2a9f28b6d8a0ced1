#pragma once

// Domain model for the transit-centric multimodal design problem: network,
// demand, commute routes, budgets and the design point being optimized.
// Canonical units: minutes, kilometres, dollars. Speeds are kept in mph as
// supplied and converted where they are used (see units.hpp).

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcmum {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LineKind { kRail, kBus };
enum class CommuteKind { kLocal, kDowntown };
enum class LegMode { kTransit, kAmod };

// Nest of a route in the nested logit model: transit-only (P), AMoD-only (A)
// or mixed (PA).
enum class ModeClass { kTransit, kAmod, kMixed };

struct Point {
  double x_km = 0.0;
  double y_km = 0.0;
  bool operator==(const Point&) const = default;
};

struct TimeGrid {
  std::string t_start = "00:00";  // HH:MM
  std::string t_end = "00:00";
  int intervals = 1;              // T
  double delta_t = 5.0;           // minutes per interval
  bool operator==(const TimeGrid&) const = default;
};

struct TransitLine {
  std::string id;
  LineKind kind = LineKind::kBus;
  std::vector<std::string> stops;
  std::vector<double> segment_times;  // minutes, size stops-1
  double capacity = 0.0;              // passengers per vehicle
  double cost_per_departure = 1.0;
  double fare = 0.0;
  bool operator==(const TransitLine&) const = default;
};

struct StationRegion {
  std::string station_id;
  double area = 0.0;         // km^2
  double shape_coeff = 0.0;  // alpha
  std::optional<Point> location;

  // Mean local trip length alpha * sqrt(A), km.
  double mean_local_trip_km() const;
  bool operator==(const StationRegion&) const = default;
};

struct Commute {
  std::string id;
  CommuteKind kind = CommuteKind::kLocal;
  std::vector<double> demand;  // per interval
  std::optional<Point> origin;
  std::optional<Point> destination;
  bool operator==(const Commute&) const = default;
};

struct Leg {
  LegMode mode = LegMode::kTransit;
  // transit legs
  std::string line;
  std::string board_stop;
  std::string alight_stop;
  // AMoD legs
  std::string station;
  std::optional<std::string> shared_trip_id;

  double distance_km = 0.0;
  double travel_min = 0.0;
  double vehicle_discount = 1.0;  // xi, 1/n for an n-way shared ride
  bool operator==(const Leg&) const = default;
};

struct CommuteRoute {
  std::string commute;
  std::string id;
  std::vector<Leg> legs;
  double walk_min = 0.0;
  ModeClass mode_class = ModeClass::kTransit;
  bool operator==(const CommuteRoute&) const = default;
};

struct SharedTripMember {
  std::string commute;
  std::string route;
  int leg = 0;  // zero-based leg index within the route
  bool operator==(const SharedTripMember&) const = default;
};

struct SharedTrip {
  std::string id;
  std::vector<SharedTripMember> members;
  // Number of distinct commutes sharing the vehicle.
  int n_parties() const;
  bool operator==(const SharedTrip&) const = default;
};

struct Budgets {
  double bus_budget = 0.0;     // B_bus, total bus departures (cost units)
  double rail_budget = 0.0;    // B_rail
  double rail_min_rate = 0.0;  // per-interval lower bound on rail departures
  double rail_max_rate = 0.0;
  double bus_max_rate = 0.0;
  double fleet_size = 0.0;     // N_bar
  bool operator==(const Budgets&) const = default;
};

struct FareSchedule {
  double transit_fare = 2.5;  // default f^l for lines that omit one
  double transfer_discount = 0.0;
  double f_base = 1.87;
  double f_book = 1.85;
  double f_min = 4.98;
  double per_mile = 0.85;    // pi_d, dollars per mile
  double per_minute = 0.30;  // pi_t
  double lambda_min = 0.1;
  double lambda_max = 1.0;
  bool operator==(const FareSchedule&) const = default;
};

struct UtilityParams {
  double beta_time_transit = 21.1;  // dollars per hour
  double beta_time_amod = 16.3;
  double beta_money = 1.0;
  double walk_speed = 3.0;   // mph
  double amod_speed = 20.0;  // mph
  bool operator==(const UtilityParams&) const = default;
};

enum class ChoiceKind { kMultinomial, kNested };

struct ChoiceModelSpec {
  ChoiceKind kind = ChoiceKind::kMultinomial;
  double phi = 1.0;
  double phi_transit = 1.0;  // phi_P
  double phi_amod = 1.0;     // phi_A
  double phi_mixed = 1.0;    // phi_PA
  bool operator==(const ChoiceModelSpec&) const = default;
};

struct OptimizerParams {
  double rho_rail = 0.1;
  double rho_bus = 1.0;
  double eta = 10.0;
  double sigma = 0.1;
  double epsilon = 0.1;
  int max_iterations = 15;
  int starts = 15;
  unsigned long long seed = 42;
  // Bus neighbourhoods up to this many grid points are enumerated exactly;
  // larger ones use relax-and-round.
  int bus_enumeration_limit = 32;
  // Add the first-order term of the expected-wait products to the step LP.
  bool linearize_wait_terms = false;
  bool operator==(const OptimizerParams&) const = default;
};

struct Scenario {
  TimeGrid grid;
  std::vector<TransitLine> lines;
  std::vector<StationRegion> stations;
  std::vector<Commute> commutes;
  std::vector<CommuteRoute> routes;
  std::vector<SharedTrip> shared_trips;
  Budgets budgets;
  FareSchedule fares;
  UtilityParams utility;
  ChoiceModelSpec choice;
  OptimizerParams algorithm;

  int intervals() const { return grid.intervals; }
  int line_count() const { return static_cast<int>(lines.size()); }
  int station_count() const { return static_cast<int>(stations.size()); }

  int find_line(const std::string& id) const;
  int find_station(const std::string& id) const;
  int find_commute(const std::string& id) const;
  int find_route(const std::string& commute, const std::string& route) const;
  double total_demand() const;

  bool operator==(const Scenario&) const = default;
};

// Decision vector: departure rates x (T x |L|), AMoD allocations N (T x |S|)
// and the AMoD discount factor lambda.
class DesignPoint {
 public:
  DesignPoint() = default;
  DesignPoint(int intervals, int lines, int stations, double lambda = 1.0);
  static DesignPoint zeros_like(const Scenario& scenario, double lambda = 1.0);

  int intervals() const { return intervals_; }
  int lines() const { return lines_; }
  int stations() const { return stations_; }

  double& x(int t, int line) { return x_[t * lines_ + line]; }
  double x(int t, int line) const { return x_[t * lines_ + line]; }
  double& n(int t, int station) { return n_[t * stations_ + station]; }
  double n(int t, int station) const { return n_[t * stations_ + station]; }
  double& lambda() { return lambda_; }
  double lambda() const { return lambda_; }

  // Flat variable layout shared with gradients and the step LP:
  // x(t,l) -> t*L + l, N(t,s) -> T*L + t*S + s, lambda -> T*(L+S).
  int variable_count() const { return intervals_ * (lines_ + stations_) + 1; }
  int x_id(int t, int line) const { return t * lines_ + line; }
  int n_id(int t, int station) const {
    return intervals_ * lines_ + t * stations_ + station;
  }
  int lambda_id() const { return intervals_ * (lines_ + stations_); }
  double value(int id) const;
  double& value(int id);

  bool operator==(const DesignPoint&) const = default;

 private:
  int intervals_ = 0;
  int lines_ = 0;
  int stations_ = 0;
  std::vector<double> x_;
  std::vector<double> n_;
  double lambda_ = 1.0;
};

std::string to_string(LineKind kind);
std::string to_string(CommuteKind kind);
std::string to_string(ModeClass mode_class);
std::string to_string(ChoiceKind kind);

// Parses "HH:MM" into minutes after midnight; throws Error on bad input.
int parse_clock(const std::string& clock);

}  // namespace tcmum
