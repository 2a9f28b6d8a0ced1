#include "tcmum/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace tcmum {

double StationRegion::mean_local_trip_km() const {
  return shape_coeff * std::sqrt(area);
}

int SharedTrip::n_parties() const {
  std::vector<std::string> seen;
  for (const auto& m : members)
    if (std::find(seen.begin(), seen.end(), m.commute) == seen.end())
      seen.push_back(m.commute);
  return static_cast<int>(seen.size());
}

int Scenario::find_line(const std::string& id) const {
  for (int i = 0; i < line_count(); ++i)
    if (lines[i].id == id) return i;
  return -1;
}

int Scenario::find_station(const std::string& id) const {
  for (int i = 0; i < station_count(); ++i)
    if (stations[i].station_id == id) return i;
  return -1;
}

int Scenario::find_commute(const std::string& id) const {
  for (int i = 0; i < static_cast<int>(commutes.size()); ++i)
    if (commutes[i].id == id) return i;
  return -1;
}

int Scenario::find_route(const std::string& commute,
                         const std::string& route) const {
  for (int i = 0; i < static_cast<int>(routes.size()); ++i)
    if (routes[i].commute == commute && routes[i].id == route) return i;
  return -1;
}

double Scenario::total_demand() const {
  double total = 0.0;
  for (const auto& c : commutes)
    for (double d : c.demand) total += d;
  return total;
}

DesignPoint::DesignPoint(int intervals, int lines, int stations, double lambda)
    : intervals_(intervals),
      lines_(lines),
      stations_(stations),
      x_(static_cast<std::size_t>(intervals) * lines, 0.0),
      n_(static_cast<std::size_t>(intervals) * stations, 0.0),
      lambda_(lambda) {}

DesignPoint DesignPoint::zeros_like(const Scenario& scenario, double lambda) {
  return DesignPoint(scenario.intervals(), scenario.line_count(),
                     scenario.station_count(), lambda);
}

double DesignPoint::value(int id) const {
  const int nx = intervals_ * lines_;
  if (id < nx) return x_[id];
  if (id < nx + intervals_ * stations_) return n_[id - nx];
  return lambda_;
}

double& DesignPoint::value(int id) {
  const int nx = intervals_ * lines_;
  if (id < nx) return x_[id];
  if (id < nx + intervals_ * stations_) return n_[id - nx];
  return lambda_;
}

std::string to_string(LineKind kind) {
  return kind == LineKind::kRail ? "rail" : "bus";
}

std::string to_string(CommuteKind kind) {
  return kind == CommuteKind::kLocal ? "local" : "downtown";
}

std::string to_string(ModeClass mode_class) {
  switch (mode_class) {
    case ModeClass::kTransit: return "P";
    case ModeClass::kAmod: return "A";
    case ModeClass::kMixed: return "PA";
  }
  return "?";
}

std::string to_string(ChoiceKind kind) {
  return kind == ChoiceKind::kMultinomial ? "mnl" : "nested";
}

int parse_clock(const std::string& clock) {
  const auto colon = clock.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= clock.size())
    throw Error("bad clock time '" + clock + "' (expected HH:MM)");
  int hours = 0;
  int minutes = 0;
  for (std::size_t i = 0; i < clock.size(); ++i) {
    if (i == colon) continue;
    if (!std::isdigit(static_cast<unsigned char>(clock[i])))
      throw Error("bad clock time '" + clock + "' (expected HH:MM)");
    int& target = i < colon ? hours : minutes;
    target = target * 10 + (clock[i] - '0');
  }
  if (minutes >= 60) throw Error("bad clock time '" + clock + "'");
  return hours * 60 + minutes;
}

}  // namespace tcmum
