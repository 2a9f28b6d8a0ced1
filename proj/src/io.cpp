#include "tcmum/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tcmum/optimizer.hpp"
#include "tcmum/validate.hpp"

namespace tcmum {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string num(double v, const char* fmt = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// Typed field access with the offending path in every error.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(path_ + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& raw(const char* key) const {
    if (!has(key)) throw ParseError(at(key) + ": missing");
    return j_.at(key);
  }
  double number(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_number()) throw ParseError(at(key) + ": expected a number");
    return v.get<double>();
  }
  double number(const char* key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }
  int integer(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw ParseError(at(key) + ": expected an integer");
    return v.get<int>();
  }
  int integer(const char* key, int fallback) const { return has(key) ? integer(key) : fallback; }
  std::string string(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_string()) throw ParseError(at(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string string(const char* key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }
  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) throw ParseError(at(key) + ": expected true or false");
    return v.get<bool>();
  }
  std::vector<double> numbers(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_array()) throw ParseError(at(key) + ": expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number())
        throw ParseError(at(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }
  std::vector<std::string> strings(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_array()) throw ParseError(at(key) + ": expected an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string())
        throw ParseError(at(key) + "[" + std::to_string(i) + "]: expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }
  std::optional<Point> point(const char* key) const {
    if (!has(key)) return std::nullopt;
    const auto xy = numbers(key);
    if (xy.size() != 2) throw ParseError(at(key) + ": expected [x_km, y_km]");
    return Point{xy[0], xy[1]};
  }
  Reader section(const char* key) const { return Reader(raw(key), at(key)); }
  const json& array(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_array()) throw ParseError(at(key) + ": expected an array");
    return v;
  }

 private:
  const json& j_;
  std::string path_;
};

std::string item(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

LineKind line_kind(const std::string& s, const std::string& path) {
  if (s == "rail") return LineKind::kRail;
  if (s == "bus") return LineKind::kBus;
  throw ParseError(path + ": unknown line kind '" + s + "'");
}
CommuteKind commute_kind(const std::string& s, const std::string& path) {
  if (s == "local") return CommuteKind::kLocal;
  if (s == "downtown") return CommuteKind::kDowntown;
  throw ParseError(path + ": unknown commute kind '" + s + "'");
}
ModeClass mode_class(const std::string& s, const std::string& path) {
  if (s == "P") return ModeClass::kTransit;
  if (s == "A") return ModeClass::kAmod;
  if (s == "PA") return ModeClass::kMixed;
  throw ParseError(path + ": unknown mode_class '" + s + "'");
}

Leg parse_leg(const Reader& r) {
  Leg leg;
  const auto mode = r.string("mode");
  if (mode == "transit") {
    leg.mode = LegMode::kTransit;
  } else if (mode == "amod") {
    leg.mode = LegMode::kAmod;
  } else {
    throw ParseError(r.at("mode") + ": expected transit or amod");
  }
  leg.line = r.string("line", "");
  leg.board_stop = r.string("board_stop", "");
  leg.alight_stop = r.string("alight_stop", "");
  leg.station = r.string("station", "");
  if (r.has("shared_trip_id")) leg.shared_trip_id = r.string("shared_trip_id");
  leg.distance_km = r.number("distance_km", 0.0);
  leg.travel_min = r.number("travel_min", 0.0);
  leg.vehicle_discount = r.number("vehicle_discount", 1.0);
  return leg;
}

ModeClass implied_mode_class(const CommuteRoute& route) {
  bool transit = false, amod = false;
  for (const auto& leg : route.legs) (leg.mode == LegMode::kTransit ? transit : amod) = true;
  if (transit && amod) return ModeClass::kMixed;
  return amod ? ModeClass::kAmod : ModeClass::kTransit;
}

json point_json(const Point& p) { return json::array({p.x_km, p.y_km}); }

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw ParseError("line " + std::to_string(line) + ": " + e.what());
  }
  const Reader top(root, "");
  for (const char* key : {"grid", "lines", "stations", "commutes", "routes", "budgets", "fares",
                          "choice", "algorithm"})
    if (!top.has(key)) throw ParseError("missing section '" + std::string(key) + "'");

  Scenario s;
  {
    const auto g = top.section("grid");
    s.grid.t_start = g.string("t_start");
    s.grid.t_end = g.string("t_end");
    s.grid.intervals = g.integer("T");
    s.grid.delta_t = g.number("delta_t");
  }
  {
    const auto f = top.section("fares");
    auto& o = s.fares;
    o.transit_fare = f.number("transit_fare", o.transit_fare);
    o.transfer_discount = f.number("transfer_discount", o.transfer_discount);
    o.f_base = f.number("f_base", o.f_base);
    o.f_book = f.number("f_book", o.f_book);
    o.f_min = f.number("f_min", o.f_min);
    o.per_mile = f.number("per_mile", o.per_mile);
    o.per_minute = f.number("per_minute", o.per_minute);
    o.lambda_min = f.number("lambda_min", o.lambda_min);
    o.lambda_max = f.number("lambda_max", o.lambda_max);
  }
  const auto& lines = top.array("lines");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const Reader r(lines[i], item("lines", i));
    TransitLine l;
    l.id = r.string("id");
    l.kind = line_kind(r.string("kind"), r.at("kind"));
    l.stops = r.strings("stops");
    l.segment_times = r.numbers("segment_times");
    l.capacity = r.number("capacity");
    l.cost_per_departure = r.number("cost_per_departure", 1.0);
    l.fare = r.number("fare", s.fares.transit_fare);
    s.lines.push_back(std::move(l));
  }
  const auto& stations = top.array("stations");
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const Reader r(stations[i], item("stations", i));
    StationRegion st;
    st.station_id = r.string("station_id");
    st.area = r.number("area");
    st.shape_coeff = r.number("shape_coeff");
    st.location = r.point("location");
    s.stations.push_back(std::move(st));
  }
  const bool demand_from_csv = top.has("demand_csv");
  const auto& commutes = top.array("commutes");
  for (std::size_t i = 0; i < commutes.size(); ++i) {
    const Reader r(commutes[i], item("commutes", i));
    Commute c;
    c.id = r.string("id");
    c.kind = commute_kind(r.string("kind"), r.at("kind"));
    if (r.has("demand") || !demand_from_csv)
      c.demand = r.numbers("demand");
    else
      c.demand.assign(std::max(0, s.grid.intervals), 0.0);
    c.origin = r.point("origin");
    c.destination = r.point("destination");
    s.commutes.push_back(std::move(c));
  }
  const auto& routes = top.array("routes");
  for (std::size_t i = 0; i < routes.size(); ++i) {
    const Reader r(routes[i], item("routes", i));
    CommuteRoute route;
    route.commute = r.string("commute");
    route.id = r.string("id");
    const auto& legs = r.array("legs");
    for (std::size_t k = 0; k < legs.size(); ++k)
      route.legs.push_back(parse_leg(Reader(legs[k], item(r.at("legs"), k))));
    route.walk_min = r.number("walk_min", 0.0);
    route.mode_class = r.has("mode_class") ? mode_class(r.string("mode_class"), r.at("mode_class"))
                                           : implied_mode_class(route);
    s.routes.push_back(std::move(route));
  }
  if (top.has("shared_trips")) {
    const auto& trips = top.array("shared_trips");
    for (std::size_t i = 0; i < trips.size(); ++i) {
      const Reader r(trips[i], item("shared_trips", i));
      SharedTrip p;
      p.id = r.string("id");
      const auto& members = r.array("members");
      for (std::size_t k = 0; k < members.size(); ++k) {
        const Reader m(members[k], item(r.at("members"), k));
        p.members.push_back({m.string("commute"), m.string("route"), m.integer("leg")});
      }
      s.shared_trips.push_back(std::move(p));
    }
  }
  {
    const auto b = top.section("budgets");
    s.budgets.bus_budget = b.number("B_bus");
    s.budgets.rail_budget = b.number("B_rail");
    s.budgets.rail_min_rate = b.number("lb_rail");
    s.budgets.rail_max_rate = b.number("ub_rail");
    s.budgets.bus_max_rate = b.number("ub_bus");
    s.budgets.fleet_size = b.number("N_bar");
  }
  {
    const auto c = top.section("choice");
    const auto kind = c.string("kind", "mnl");
    if (kind == "mnl" || kind == "MNL")
      s.choice.kind = ChoiceKind::kMultinomial;
    else if (kind == "nested" || kind == "NestedLogit")
      s.choice.kind = ChoiceKind::kNested;
    else
      throw ParseError(c.at("kind") + ": expected mnl or nested");
    s.choice.phi = c.number("phi", 1.0);
    s.choice.phi_transit = c.number("phi_P", 1.0);
    s.choice.phi_amod = c.number("phi_A", 1.0);
    s.choice.phi_mixed = c.number("phi_PA", 1.0);
    auto& u = s.utility;
    u.beta_time_transit = c.number("beta_time_transit", u.beta_time_transit);
    u.beta_time_amod = c.number("beta_time_amod", u.beta_time_amod);
    u.beta_money = c.number("beta_money", u.beta_money);
    u.walk_speed = c.number("walk_speed", u.walk_speed);
    u.amod_speed = c.number("amod_speed", u.amod_speed);
  }
  {
    const auto a = top.section("algorithm");
    auto& o = s.algorithm;
    o.rho_rail = a.number("rho_rail", o.rho_rail);
    o.rho_bus = a.number("rho_bus", o.rho_bus);
    o.eta = a.number("eta", o.eta);
    o.sigma = a.number("sigma", o.sigma);
    o.epsilon = a.number("epsilon", o.epsilon);
    o.max_iterations = a.integer("max_iterations", o.max_iterations);
    o.starts = a.integer("starts", o.starts);
    if (a.has("seed")) {
      const auto& v = a.raw("seed");
      if (!v.is_number_unsigned()) throw ParseError(a.at("seed") + ": expected an unsigned integer");
      o.seed = v.get<unsigned long long>();
    }
    o.bus_enumeration_limit = a.integer("bus_enumeration_limit", o.bus_enumeration_limit);
    o.linearize_wait_terms = a.boolean("linearize_wait_terms", o.linearize_wait_terms);
  }
  if (demand_from_csv) {
    fs::path p(top.string("demand_csv"));
    if (p.is_relative()) p = fs::path(base_dir) / p;
    std::ifstream in(p);
    if (!in) throw ParseError("demand_csv: cannot open '" + p.string() + "'");
    apply_demand_csv(s, in);
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  const auto dir = fs::path(path).parent_path();
  auto s = parse_scenario(read_file(path), dir.empty() ? "." : dir.string());
  require_valid(s);
  return s;
}

std::string emit_scenario(const Scenario& s) {
  json root;
  root["grid"] = {{"t_start", s.grid.t_start},
                  {"t_end", s.grid.t_end},
                  {"T", s.grid.intervals},
                  {"delta_t", s.grid.delta_t}};
  root["lines"] = json::array();
  for (const auto& l : s.lines)
    root["lines"].push_back({{"id", l.id},
                             {"kind", to_string(l.kind)},
                             {"stops", l.stops},
                             {"segment_times", l.segment_times},
                             {"capacity", l.capacity},
                             {"cost_per_departure", l.cost_per_departure},
                             {"fare", l.fare}});
  root["stations"] = json::array();
  for (const auto& st : s.stations) {
    json j = {{"station_id", st.station_id}, {"area", st.area}, {"shape_coeff", st.shape_coeff}};
    if (st.location) j["location"] = point_json(*st.location);
    root["stations"].push_back(std::move(j));
  }
  root["commutes"] = json::array();
  for (const auto& c : s.commutes) {
    json j = {{"id", c.id}, {"kind", to_string(c.kind)}, {"demand", c.demand}};
    if (c.origin) j["origin"] = point_json(*c.origin);
    if (c.destination) j["destination"] = point_json(*c.destination);
    root["commutes"].push_back(std::move(j));
  }
  root["routes"] = json::array();
  for (const auto& r : s.routes) {
    json legs = json::array();
    for (const auto& leg : r.legs) {
      json j = {{"mode", leg.mode == LegMode::kTransit ? "transit" : "amod"}};
      for (auto [key, value] : {std::pair{"line", &leg.line},
                                {"board_stop", &leg.board_stop},
                                {"alight_stop", &leg.alight_stop},
                                {"station", &leg.station}})
        if (!value->empty()) j[key] = *value;
      if (leg.shared_trip_id) j["shared_trip_id"] = *leg.shared_trip_id;
      j["distance_km"] = leg.distance_km;
      j["travel_min"] = leg.travel_min;
      j["vehicle_discount"] = leg.vehicle_discount;
      legs.push_back(std::move(j));
    }
    root["routes"].push_back({{"commute", r.commute},
                              {"id", r.id},
                              {"legs", std::move(legs)},
                              {"walk_min", r.walk_min},
                              {"mode_class", to_string(r.mode_class)}});
  }
  if (!s.shared_trips.empty()) {
    root["shared_trips"] = json::array();
    for (const auto& p : s.shared_trips) {
      json members = json::array();
      for (const auto& m : p.members)
        members.push_back({{"commute", m.commute}, {"route", m.route}, {"leg", m.leg}});
      root["shared_trips"].push_back({{"id", p.id}, {"members", std::move(members)}});
    }
  }
  const auto& b = s.budgets;
  root["budgets"] = {{"B_bus", b.bus_budget},     {"B_rail", b.rail_budget},
                     {"lb_rail", b.rail_min_rate}, {"ub_rail", b.rail_max_rate},
                     {"ub_bus", b.bus_max_rate},   {"N_bar", b.fleet_size}};
  const auto& f = s.fares;
  root["fares"] = {{"transit_fare", f.transit_fare}, {"transfer_discount", f.transfer_discount},
                   {"f_base", f.f_base},             {"f_book", f.f_book},
                   {"f_min", f.f_min},               {"per_mile", f.per_mile},
                   {"per_minute", f.per_minute},     {"lambda_min", f.lambda_min},
                   {"lambda_max", f.lambda_max}};
  const auto& u = s.utility;
  root["choice"] = {{"kind", to_string(s.choice.kind)},
                    {"phi", s.choice.phi},
                    {"phi_P", s.choice.phi_transit},
                    {"phi_A", s.choice.phi_amod},
                    {"phi_PA", s.choice.phi_mixed},
                    {"beta_time_transit", u.beta_time_transit},
                    {"beta_time_amod", u.beta_time_amod},
                    {"beta_money", u.beta_money},
                    {"walk_speed", u.walk_speed},
                    {"amod_speed", u.amod_speed}};
  const auto& a = s.algorithm;
  root["algorithm"] = {{"rho_rail", a.rho_rail},
                       {"rho_bus", a.rho_bus},
                       {"eta", a.eta},
                       {"sigma", a.sigma},
                       {"epsilon", a.epsilon},
                       {"max_iterations", a.max_iterations},
                       {"starts", a.starts},
                       {"seed", a.seed},
                       {"bus_enumeration_limit", a.bus_enumeration_limit},
                       {"linearize_wait_terms", a.linearize_wait_terms}};
  return root.dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << emit_scenario(scenario);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": expected a number, got '" + s + "'");
  }
}

int parse_int(const std::string& s, const std::string& where) {
  const double v = parse_number(s, where);
  if (v != std::floor(v)) throw ParseError(where + ": expected an integer, got '" + s + "'");
  return static_cast<int>(v);
}

// Reads rows after the expected header, skipping blank and # lines.
template <class Fn>
void read_csv(std::istream& in, const std::string& header, const std::string& what, Fn&& fn) {
  std::string line;
  int lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      if (line != header)
        throw ParseError(what + " line " + std::to_string(lineno) + ": expected header '" +
                         header + "'");
      seen_header = true;
      continue;
    }
    fn(split_csv(line), what + " line " + std::to_string(lineno));
  }
  if (!seen_header) throw ParseError(what + ": missing header '" + header + "'");
}

}  // namespace

void apply_demand_csv(Scenario& scenario, std::istream& in) {
  read_csv(in, "commute_id,t,demand", "demand csv",
           [&](const std::vector<std::string>& f, const std::string& where) {
             if (f.size() != 3) throw ParseError(where + ": expected 3 fields");
             const int c = scenario.find_commute(f[0]);
             if (c < 0) throw ParseError(where + ": unknown commute '" + f[0] + "'");
             const int t = parse_int(f[1], where);
             auto& d = scenario.commutes[c].demand;
             if (t < 0 || t >= scenario.intervals())
               throw ParseError(where + ": interval " + f[1] + " outside the grid");
             if (static_cast<int>(d.size()) < scenario.intervals())
               d.resize(scenario.intervals(), 0.0);
             d[t] = parse_number(f[2], where);
           });
}

void write_demand_csv(const Scenario& scenario, std::ostream& out) {
  out << "commute_id,t,demand\n";
  for (const auto& c : scenario.commutes)
    for (std::size_t t = 0; t < c.demand.size(); ++t)
      out << c.id << ',' << t << ',' << num(c.demand[t], "%.17g") << '\n';
}

void write_design_csv(const Scenario& scenario, const DesignPoint& d, std::ostream& out) {
  out << "kind,index,value\n";
  for (int l = 0; l < scenario.line_count(); ++l)
    for (int t = 0; t < d.intervals(); ++t)
      out << "x," << scenario.lines[l].id << '@' << t << ',' << num(d.x(t, l), "%.17g") << '\n';
  for (int s = 0; s < scenario.station_count(); ++s)
    for (int t = 0; t < d.intervals(); ++t)
      out << "N," << scenario.stations[s].station_id << '@' << t << ','
          << num(d.n(t, s), "%.17g") << '\n';
  out << "lambda,," << num(d.lambda(), "%.17g") << '\n';
}

DesignPoint read_design_csv(const Scenario& scenario, std::istream& in) {
  DesignPoint d = DesignPoint::zeros_like(scenario);
  read_csv(in, "kind,index,value", "design csv",
           [&](const std::vector<std::string>& f, const std::string& where) {
             if (f.size() != 3) throw ParseError(where + ": expected 3 fields");
             const double v = parse_number(f[2], where);
             if (f[0] == "lambda") {
               d.lambda() = v;
               return;
             }
             const auto at = f[1].rfind('@');
             if (at == std::string::npos) throw ParseError(where + ": index must be id@t");
             const auto id = f[1].substr(0, at);
             const int t = parse_int(f[1].substr(at + 1), where);
             if (t < 0 || t >= scenario.intervals())
               throw ParseError(where + ": interval outside the grid");
             if (f[0] == "x") {
               const int l = scenario.find_line(id);
               if (l < 0) throw ParseError(where + ": unknown line '" + id + "'");
               d.x(t, l) = v;
             } else if (f[0] == "N") {
               const int s = scenario.find_station(id);
               if (s < 0) throw ParseError(where + ": unknown station '" + id + "'");
               d.n(t, s) = v;
             } else {
               throw ParseError(where + ": unknown kind '" + f[0] + "'");
             }
           });
  return d;
}

DesignPoint load_design(const Scenario& scenario, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_design_csv(scenario, in);
}

std::string report_header() {
  return "gamma,n_bar,avg_disutility,avg_walking,avg_waiting,avg_utility,line_utilization,"
         "amod_utilization,lambda_star,amod_local,bus_local,unserved_local,amod_rail_dt,"
         "bus_rail_dt,rail_dt,unserved_dt,psi,avg_excess_waiting,objective,seed,error";
}

std::string report_line(const ReportRow& row) {
  std::string out = num(row.gamma) + "," + num(row.n_bar) + ",";
  const auto& r = row.report;
  if (row.error.empty()) {
    for (double v : {r.avg_disutility, r.avg_walking, r.avg_waiting, r.avg_utility,
                     r.line_utilization, r.amod_utilization, r.lambda_star, r.shares.amod_local,
                     r.shares.bus_local, r.unserved_local, r.shares.amod_rail_dt,
                     r.shares.bus_rail_dt, r.shares.rail_dt, r.unserved_dt})
      out += num(v) + ",";
  } else {
    out += std::string(14, ',');
  }
  out += num(row.psi) + ",";
  out += row.error.empty() ? num(r.avg_excess_waiting) + "," + num(r.objective) + "," : ",,";
  out += std::to_string(row.seed) + ",";
  std::string err = row.error;
  for (char& ch : err)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ch == ',' ? ';' : ' ';
  return out + err;
}

std::string departure_pattern(double x) {
  if (x <= 0.0) return "";
  for (int q = 1; q <= 12; ++q) {
    const double p = std::round(x * q);
    if (p >= 1.0 && std::abs(x * q - p) < 1e-6) {
      const auto dep = num(p) + (p == 1.0 ? " departure" : " departures");
      return q == 1 ? dep + " per interval" : dep + " per " + std::to_string(q) + " intervals";
    }
  }
  return "";
}

void write_frequency_profile(const Scenario& scenario, const DesignPoint& d, std::ostream& out) {
  out << "line,t,departures,headway_min,pattern\n";
  for (int l = 0; l < scenario.line_count(); ++l) {
    for (int t = 0; t < d.intervals(); ++t) {
      const double x = d.x(t, l);
      out << scenario.lines[l].id << ',' << t << ',' << num(x) << ',';
      if (x > 0.0) out << num(scenario.grid.delta_t / x);
      out << ',' << departure_pattern(x) << '\n';
    }
  }
}

DemandSeed DemandSeed::from_scenario(const Scenario& scenario) {
  DemandSeed seed;
  for (const auto& c : scenario.commutes) {
    seed.weights.push_back(c.demand);
    seed.kinds.push_back(c.kind);
  }
  seed.total_demand = scenario.total_demand();
  return seed;
}

std::vector<std::vector<double>> generate_demand(const DemandSeed& seed, double psi,
                                                 std::uint64_t rng_seed) {
  if (!(psi >= 0.0 && psi <= 1.0)) throw Error("psi must lie in [0,1]");
  if (seed.weights.size() != seed.kinds.size())
    throw Error("demand seed weights and kinds differ in length");
  auto w = seed.weights;
  if (seed.jitter > 0.0) {
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> noise(-seed.jitter, seed.jitter);
    for (auto& row : w)
      for (auto& v : row) v *= std::max(0.0, 1.0 + noise(rng));
  }
  double sums[2] = {0.0, 0.0};
  for (std::size_t c = 0; c < w.size(); ++c)
    for (double v : w[c]) {
      if (v < 0.0) throw Error("demand seed weights must be nonnegative");
      sums[seed.kinds[c] == CommuteKind::kLocal ? 0 : 1] += v;
    }
  const double share[2] = {1.0 - psi, psi};
  if (share[1] > 0.0 && sums[1] <= 0.0) throw Error("psi > 0 but the downtown seed is empty");
  if (share[0] > 0.0 && sums[0] <= 0.0) throw Error("psi < 1 but the local seed is empty");
  for (std::size_t c = 0; c < w.size(); ++c) {
    const int k = seed.kinds[c] == CommuteKind::kLocal ? 0 : 1;
    for (auto& v : w[c]) v = sums[k] > 0.0 ? seed.total_demand * share[k] * v / sums[k] : 0.0;
  }
  return w;
}

FleetRule parse_fleet_rule(const std::string& name) {
  if (name == "PCE" || name == "pce") return FleetRule::kPce;
  if (name == "CCE" || name == "cce") return FleetRule::kCce;
  throw Error("unknown fleet rule '" + name + "' (expected PCE or CCE)");
}

double equivalent_fleet(double gamma, double bus_budget, double horizon_h, FleetRule rule) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("gamma must lie in [0,1]");
  if (!(horizon_h > 0.0)) throw Error("horizon must be positive");
  // one run per bus per hour; epsilon absorbs binary error at exact halves
  const double removed = std::floor(bus_budget * (1.0 - gamma) / horizon_h + 0.5 + 1e-9);
  return (rule == FleetRule::kPce ? 2.0 : 4.0) * removed;
}

SweepSpec load_sweep_spec(const std::string& path) {
  const auto text = read_file(path);
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  const Reader r(root, "");
  SweepSpec spec;
  const auto dir = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path q(p);
    return (q.is_relative() && !dir.empty() ? dir / q : q).string();
  };
  spec.base_scenario = resolve(r.string("base_scenario"));
  spec.output = resolve(r.string("output"));
  if (r.has("seed")) {
    const auto& v = r.raw("seed");
    if (!v.is_number_unsigned()) throw ParseError("seed: expected an unsigned integer");
    spec.seed = v.get<std::uint64_t>();
  }
  if (r.has("gammas")) spec.gammas = r.numbers("gammas");
  if (r.has("psis")) spec.psis = r.numbers("psis");
  if (r.has("fleet")) {
    const auto& f = r.raw("fleet");
    if (f.is_string())
      spec.fleet_rule = parse_fleet_rule(f.get<std::string>());
    else
      spec.fleet_sizes = r.numbers("fleet");
  }
  if (r.has("total_demand")) spec.total_demand = r.number("total_demand");
  if (r.has("starts")) spec.starts = r.integer("starts");
  spec.jitter = r.number("jitter", 0.0);
  if (spec.gammas.empty()) throw ParseError("gammas: must not be empty");
  for (double g : spec.gammas)
    if (!(g >= 0.0 && g <= 1.0)) throw ParseError("gammas: values must lie in [0,1]");
  for (double p : spec.psis)
    if (!(p >= 0.0 && p <= 1.0)) throw ParseError("psis: values must lie in [0,1]");
  return spec;
}

std::vector<SweepCell> sweep_cells(const SweepSpec& spec, const Scenario& base) {
  const double hours = base.intervals() * base.grid.delta_t / 60.0;
  std::vector<std::optional<double>> psis;
  if (spec.psis.empty()) psis.push_back(std::nullopt);
  for (double p : spec.psis) psis.push_back(p);
  std::vector<SweepCell> out;
  for (double g : spec.gammas) {
    for (const auto& p : psis) {
      if (spec.fleet_rule) {
        out.push_back({g, p, equivalent_fleet(g, base.budgets.bus_budget, hours, *spec.fleet_rule)});
      } else if (!spec.fleet_sizes.empty()) {
        for (double n : spec.fleet_sizes) out.push_back({g, p, n});
      } else {
        out.push_back({g, p, base.budgets.fleet_size});
      }
    }
  }
  return out;
}

Scenario sweep_scenario(const Scenario& base, const SweepSpec& spec, const SweepCell& cell) {
  Scenario s = base;
  s.budgets.bus_budget = cell.gamma * base.budgets.bus_budget;
  s.budgets.fleet_size = cell.n_bar;
  s.algorithm.seed = spec.seed;
  if (spec.starts) s.algorithm.starts = *spec.starts;
  if (cell.psi) {
    auto seed = DemandSeed::from_scenario(base);
    if (spec.total_demand) seed.total_demand = *spec.total_demand;
    seed.jitter = spec.jitter;
    const auto demand = generate_demand(seed, *cell.psi, spec.seed);
    for (std::size_t c = 0; c < demand.size(); ++c) s.commutes[c].demand = demand[c];
  }
  return s;
}

double downtown_share(const Scenario& s) {
  double dt = 0.0, all = 0.0;
  for (const auto& c : s.commutes)
    for (double v : c.demand) {
      all += v;
      if (c.kind == CommuteKind::kDowntown) dt += v;
    }
  return all > 0.0 ? dt / all : 0.0;
}

namespace {

std::string cell_key(double gamma, double n_bar, double psi) {
  return num(gamma) + "|" + num(n_bar) + "|" + num(psi);
}

}  // namespace

SweepSummary run_sweep(const SweepSpec& spec, int jobs) {
  const auto base = load_scenario(spec.base_scenario);
  const auto cells = sweep_cells(spec, base);
  SweepSummary summary;
  summary.cells = static_cast<int>(cells.size());

  std::vector<double> psi(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k)
    psi[k] = cells[k].psi ? *cells[k].psi : downtown_share(base);

  // rows already written
  std::set<std::string> done;
  bool fresh = true;
  {
    std::ifstream in(spec.output);
    std::string line;
    const auto header = report_header();
    while (in && std::getline(in, line)) {
      fresh = false;
      if (line.empty() || line[0] == '#' || line == header) continue;
      const auto f = split_csv(line);
      if (f.size() < 17) continue;
      done.insert(cell_key(parse_number(f[0], "gamma"), parse_number(f[1], "n_bar"),
                           parse_number(f[16], "psi")));
    }
  }
  std::ofstream out(spec.output, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot write '" + spec.output + "'");
  if (fresh) out << "# tcmum sweep seed=" << spec.seed << '\n' << report_header() << '\n';
  out.flush();

  std::vector<std::size_t> todo;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (done.count(cell_key(cells[k].gamma, cells[k].n_bar, psi[k])))
      ++summary.skipped;
    else
      todo.push_back(k);
  }

  // results are committed in spec order by whichever worker completes the
  // next pending row
  std::vector<std::optional<std::string>> rows(todo.size());
  std::size_t next_write = 0;
  std::mutex writer;
  parallel_for(todo.size(), jobs, [&](std::size_t j) {
    const auto& cell = cells[todo[j]];
    ReportRow row;
    row.gamma = cell.gamma;
    row.n_bar = cell.n_bar;
    row.psi = psi[todo[j]];
    row.seed = spec.seed;
    try {
      const auto s = sweep_scenario(base, spec, cell);
      require_valid(s);
      const auto best = multi_start(s, 1);
      row.report = evaluate_design(s, best.best).report;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    std::lock_guard<std::mutex> lock(writer);
    (row.error.empty() ? summary.solved : summary.failed)++;
    rows[j] = report_line(row);
    while (next_write < rows.size() && rows[next_write]) {
      out << *rows[next_write] << '\n';
      ++next_write;
    }
    out.flush();
  });
  return summary;
}

DesignGrid parse_design_grid(const Scenario& scenario, const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("design grid: ") + e.what());
  }
  const Reader r(root, "");
  DesignGrid grid;
  const auto lines = r.section("lines");
  for (const auto& line : scenario.lines)
    grid.line_levels.push_back(lines.numbers(line.id.c_str()));
  if (scenario.station_count() > 0) {
    const auto stations = r.section("stations");
    for (const auto& st : scenario.stations)
      grid.station_levels.push_back(stations.numbers(st.station_id.c_str()));
  }
  grid.lambda_levels = r.numbers("lambda");
  if (grid.size() == 0) throw ParseError("design grid: every level list must be nonempty");
  return grid;
}

DesignGrid load_design_grid(const Scenario& scenario, const std::string& path) {
  return parse_design_grid(scenario, read_file(path));
}

int default_jobs() {
  if (const char* env = std::getenv("TCMUM_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  return 1;
}

}  // namespace tcmum
