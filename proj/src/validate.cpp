#include "tcmum/validate.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace tcmum {
namespace {

class Checker {
 public:
  explicit Checker(ValidationReport& report) : report_(report) {}

  void fail(std::string path, std::string message) {
    report_.violations.push_back({std::move(path), std::move(message)});
  }
  void positive(double v, const std::string& path, const std::string& name) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(path, name + " must be positive");
  }
  void nonnegative(double v, const std::string& path, const std::string& name) {
    if (!(v >= 0.0) || !std::isfinite(v))
      fail(path, name + " must be nonnegative");
  }

 private:
  ValidationReport& report_;
};

std::string at(const std::string& section, std::size_t i) {
  return section + "[" + std::to_string(i) + "]";
}

int stop_position(const TransitLine& line, const std::string& stop, int from) {
  for (int p = from; p < static_cast<int>(line.stops.size()); ++p)
    if (line.stops[p] == stop) return p;
  return -1;
}

ModeClass implied_class(const CommuteRoute& route) {
  bool transit = false;
  bool amod = false;
  for (const auto& leg : route.legs)
    (leg.mode == LegMode::kTransit ? transit : amod) = true;
  if (transit && amod) return ModeClass::kMixed;
  return amod ? ModeClass::kAmod : ModeClass::kTransit;
}

void check_grid(const TimeGrid& g, Checker& check) {
  if (g.intervals < 1) check.fail("grid.T", "T must be at least 1");
  if (!(g.delta_t > 0.0)) {
    check.fail("grid.delta_t", "delta_t must be positive");
    return;
  }
  try {
    const int span = parse_clock(g.t_end) - parse_clock(g.t_start);
    if (std::abs(span - g.intervals * g.delta_t) > 1e-9) {
      std::ostringstream msg;
      msg << "t_end - t_start = " << span << " min but T * delta_t = "
          << g.intervals * g.delta_t << " min";
      check.fail("grid", msg.str());
    }
  } catch (const Error& e) {
    check.fail("grid", e.what());
  }
}

void check_lines(const Scenario& s, Checker& check) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < s.lines.size(); ++i) {
    const auto& line = s.lines[i];
    const auto path = at("lines", i);
    if (!ids.insert(line.id).second)
      check.fail(path + ".id", "duplicate line id '" + line.id + "'");
    if (line.stops.size() < 2)
      check.fail(path + ".stops", "a line needs at least 2 stops");
    if (line.segment_times.size() + 1 != line.stops.size())
      check.fail(path + ".segment_times",
                 "segment_times must have one entry per consecutive stop pair");
    for (std::size_t k = 0; k < line.segment_times.size(); ++k)
      check.nonnegative(line.segment_times[k], path + ".segment_times",
                        "segment time");
    check.positive(line.capacity, path + ".capacity", "capacity");
    check.positive(line.cost_per_departure, path + ".cost_per_departure",
                   "cost_per_departure");
    check.nonnegative(line.fare, path + ".fare", "fare");
  }
}

void check_stations(const Scenario& s, Checker& check) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < s.stations.size(); ++i) {
    const auto& st = s.stations[i];
    const auto path = at("stations", i);
    if (!ids.insert(st.station_id).second)
      check.fail(path + ".station_id",
                 "duplicate station id '" + st.station_id + "'");
    check.positive(st.area, path + ".area", "area");
    check.positive(st.shape_coeff, path + ".shape_coeff", "shape_coeff");
  }
}

void check_commutes(const Scenario& s, Checker& check) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < s.commutes.size(); ++i) {
    const auto& c = s.commutes[i];
    const auto path = at("commutes", i);
    if (!ids.insert(c.id).second)
      check.fail(path + ".id", "duplicate commute id '" + c.id + "'");
    if (static_cast<int>(c.demand.size()) != s.grid.intervals)
      check.fail(path + ".demand",
                 "demand length " + std::to_string(c.demand.size()) +
                     " does not match T = " + std::to_string(s.grid.intervals));
    for (double d : c.demand)
      if (!(d >= 0.0) || !std::isfinite(d)) {
        check.fail(path + ".demand", "demand entries must be nonnegative");
        break;
      }
  }
}

void check_leg(const Scenario& s, const Leg& leg, const std::string& path,
               Checker& check) {
  check.nonnegative(leg.distance_km, path + ".distance_km", "distance_km");
  check.nonnegative(leg.travel_min, path + ".travel_min", "travel_min");
  if (!(leg.vehicle_discount > 0.0 && leg.vehicle_discount <= 1.0))
    check.fail(path + ".vehicle_discount", "vehicle_discount must be in (0,1]");
  if (leg.mode == LegMode::kTransit) {
    const int l = s.find_line(leg.line);
    if (l < 0) {
      check.fail(path + ".line", "unknown line '" + leg.line + "'");
      return;
    }
    const auto& line = s.lines[l];
    const int board = stop_position(line, leg.board_stop, 0);
    if (board < 0) {
      check.fail(path + ".board_stop", "stop '" + leg.board_stop +
                                           "' is not on line '" + line.id + "'");
      return;
    }
    if (stop_position(line, leg.alight_stop, board + 1) < 0)
      check.fail(path + ".alight_stop",
                 "stop '" + leg.alight_stop + "' is not after '" +
                     leg.board_stop + "' on line '" + line.id + "'");
  } else {
    if (s.find_station(leg.station) < 0)
      check.fail(path + ".station", "unknown station '" + leg.station + "'");
  }
}

void check_routes(const Scenario& s, Checker& check) {
  std::set<std::pair<std::string, std::string>> ids;
  for (std::size_t i = 0; i < s.routes.size(); ++i) {
    const auto& r = s.routes[i];
    const auto path = at("routes", i);
    if (s.find_commute(r.commute) < 0)
      check.fail(path + ".commute", "unknown commute '" + r.commute + "'");
    if (!ids.insert({r.commute, r.id}).second)
      check.fail(path + ".id", "duplicate route id '" + r.id +
                                   "' for commute '" + r.commute + "'");
    if (r.legs.empty()) check.fail(path + ".legs", "a route needs at least 1 leg");
    check.nonnegative(r.walk_min, path + ".walk_min", "walk_min");
    for (std::size_t k = 0; k < r.legs.size(); ++k)
      check_leg(s, r.legs[k], at(path + ".legs", k), check);
    if (!r.legs.empty() && implied_class(r) != r.mode_class)
      check.fail(path + ".mode_class",
                 "mode_class " + to_string(r.mode_class) +
                     " is inconsistent with the leg modes (" +
                     to_string(implied_class(r)) + ")");
  }
}

void check_shared_trips(const Scenario& s, Checker& check) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < s.shared_trips.size(); ++i) {
    const auto& p = s.shared_trips[i];
    const auto path = at("shared_trips", i);
    if (!ids.insert(p.id).second)
      check.fail(path + ".id", "duplicate shared trip id '" + p.id + "'");
    if (p.n_parties() < 2)
      check.fail(path + ".members", "a shared trip needs at least 2 parties");
    std::string station;
    for (std::size_t k = 0; k < p.members.size(); ++k) {
      const auto& m = p.members[k];
      const auto mpath = at(path + ".members", k);
      const int r = s.find_route(m.commute, m.route);
      if (r < 0) {
        check.fail(mpath, "unknown route '" + m.commute + "/" + m.route + "'");
        continue;
      }
      const auto& route = s.routes[r];
      if (m.leg < 0 || m.leg >= static_cast<int>(route.legs.size())) {
        check.fail(mpath + ".leg", "leg index out of range");
        continue;
      }
      const auto& leg = route.legs[m.leg];
      if (leg.mode != LegMode::kAmod) {
        check.fail(mpath + ".leg", "shared trip member must be an AMoD leg");
        continue;
      }
      if (station.empty()) station = leg.station;
      if (leg.station != station)
        check.fail(mpath, "shared trip members must use the same station");
      if (leg.shared_trip_id != p.id)
        check.fail(mpath, "member leg does not reference shared trip '" +
                              p.id + "'");
      if (p.n_parties() >= 2 &&
          std::abs(leg.vehicle_discount - 1.0 / p.n_parties()) > 1e-9)
        check.fail(mpath, "vehicle_discount must equal 1/n_parties");
    }
  }
  for (std::size_t i = 0; i < s.routes.size(); ++i)
    for (std::size_t k = 0; k < s.routes[i].legs.size(); ++k) {
      const auto& id = s.routes[i].legs[k].shared_trip_id;
      if (id && !ids.count(*id))
        check.fail(at(at("routes", i) + ".legs", k) + ".shared_trip_id",
                   "unknown shared trip '" + *id + "'");
    }
}

void check_parameters(const Scenario& s, Checker& check) {
  const auto& b = s.budgets;
  check.nonnegative(b.bus_budget, "budgets.B_bus", "B_bus");
  check.nonnegative(b.rail_budget, "budgets.B_rail", "B_rail");
  check.nonnegative(b.rail_min_rate, "budgets.lb_rail", "lb_rail");
  check.nonnegative(b.bus_max_rate, "budgets.ub_bus", "ub_bus");
  check.nonnegative(b.fleet_size, "budgets.N_bar", "N_bar");
  if (b.rail_min_rate > b.rail_max_rate)
    check.fail("budgets.ub_rail", "lb_rail must not exceed ub_rail");
  double rail_floor = 0.0;
  for (const auto& line : s.lines)
    if (line.kind == LineKind::kRail)
      rail_floor += line.cost_per_departure * b.rail_min_rate * s.grid.intervals;
  if (rail_floor > b.rail_budget + 1e-9)
    check.fail("budgets.B_rail",
               "rail budget cannot cover the minimum rail service");

  const auto& f = s.fares;
  for (auto [v, name] : {std::pair{f.transit_fare, "transit_fare"},
                         {f.f_base, "f_base"},
                         {f.f_book, "f_book"},
                         {f.f_min, "f_min"},
                         {f.per_mile, "pi_d"},
                         {f.per_minute, "pi_t"}})
    check.nonnegative(v, std::string("fares.") + name, name);
  if (!(f.transfer_discount >= 0.0 && f.transfer_discount <= 1.0))
    check.fail("fares.transfer_discount", "transfer_discount must be in [0,1]");
  if (!(f.lambda_min <= f.lambda_max))
    check.fail("fares.lambda_max", "lambda_min must not exceed lambda_max");
  check.nonnegative(f.lambda_min, "fares.lambda_min", "lambda_min");

  const auto& u = s.utility;
  check.positive(u.beta_time_transit, "choice.beta_time_transit",
                 "beta_time_transit");
  check.positive(u.beta_time_amod, "choice.beta_time_amod", "beta_time_amod");
  check.positive(u.beta_money, "choice.beta_money", "beta_money");
  check.positive(u.walk_speed, "choice.walk_speed", "walk_speed");
  check.positive(u.amod_speed, "choice.amod_speed", "amod_speed");

  const auto& c = s.choice;
  check.positive(c.phi, "choice.phi", "phi");
  check.positive(c.phi_transit, "choice.phi_P", "phi_P");
  check.positive(c.phi_amod, "choice.phi_A", "phi_A");
  check.positive(c.phi_mixed, "choice.phi_PA", "phi_PA");
  if (c.kind == ChoiceKind::kNested &&
      (c.phi > c.phi_transit || c.phi > c.phi_amod || c.phi > c.phi_mixed))
    check.fail("choice.phi", "nested logit requires phi <= phi_m for every nest");

  const auto& a = s.algorithm;
  check.nonnegative(a.rho_rail, "algorithm.rho_rail", "rho_rail");
  check.nonnegative(a.rho_bus, "algorithm.rho_bus", "rho_bus");
  check.nonnegative(a.eta, "algorithm.eta", "eta");
  check.nonnegative(a.sigma, "algorithm.sigma", "sigma");
  check.positive(a.epsilon, "algorithm.epsilon", "epsilon");
  if (a.max_iterations < 1)
    check.fail("algorithm.max_iterations", "max_iterations must be at least 1");
  if (a.starts < 1) check.fail("algorithm.starts", "starts must be at least 1");
}

}  // namespace

std::string ValidationReport::summary() const {
  std::ostringstream out;
  for (const auto& v : violations) out << v.path << ": " << v.message << "\n";
  return out.str();
}

ValidationError::ValidationError(ValidationReport report)
    : Error("scenario validation failed:\n" + report.summary()),
      report_(std::move(report)) {}

ValidationReport validate_scenario(const Scenario& scenario) {
  ValidationReport report;
  Checker check(report);
  check_grid(scenario.grid, check);
  check_lines(scenario, check);
  check_stations(scenario, check);
  check_commutes(scenario, check);
  check_routes(scenario, check);
  check_shared_trips(scenario, check);
  check_parameters(scenario, check);
  return report;
}

void require_valid(const Scenario& scenario) {
  auto report = validate_scenario(scenario);
  if (!report.ok()) throw ValidationError(std::move(report));
}

}  // namespace tcmum
