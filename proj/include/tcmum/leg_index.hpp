#pragma once

// Resolved commute-route legs and the leg-set classifications that every
// constraint and objective term is built from:
//   first_boarding  K(s,l)  routes whose first leg boards line l at stop s
//   transfer        H(s,l)  legs i >= 2 boarding line l at stop s
//   boarding        U(s,l)  K + H, every transit leg boarding at (s,l)
//   through         I(s,l)  legs on board line l while it passes stop s
//   direct          Y(s)    first AMoD legs of local commutes
//   first_mile      M(s)    first AMoD legs of downtown commutes
//   last_mile       N(s)    AMoD legs i >= 2
// plus the flat layout of boarding variables z(route, leg, t).

#include <vector>

#include "tcmum/model.hpp"

namespace tcmum {

enum class AmodRole { kNone, kDirect, kFirstMile, kLastMile };

struct LegRef {
  int route = 0;
  int leg = 0;
  bool operator==(const LegRef&) const = default;
};

struct ResolvedLeg {
  LegMode mode = LegMode::kTransit;
  int line = -1;
  int board_pos = -1;   // stop position on the line
  int alight_pos = -1;
  int station = -1;
  AmodRole role = AmodRole::kNone;
  int shared_trip = -1;
  double discount = 1.0;   // xi
  double travel_min = 0.0;
  double distance_km = 0.0;
  int shift = 0;           // intervals until available for the next leg
};

struct LegIndex {
  int intervals = 0;
  int line_count = 0;
  int station_count = 0;

  std::vector<int> route_commute;
  std::vector<std::vector<ResolvedLeg>> legs;       // per route
  std::vector<std::vector<int>> routes_of_commute;  // per commute

  // [line][stop position] -> legs
  std::vector<std::vector<std::vector<LegRef>>> first_boarding;
  std::vector<std::vector<std::vector<LegRef>>> transfer;
  std::vector<std::vector<std::vector<LegRef>>> boarding;
  std::vector<std::vector<std::vector<LegRef>>> through;
  // [station] -> legs
  std::vector<std::vector<LegRef>> direct;
  std::vector<std::vector<LegRef>> first_mile;
  std::vector<std::vector<LegRef>> last_mile;
  // [route] -> leg positions
  std::vector<std::vector<int>> transit_legs;
  std::vector<std::vector<int>> amod_legs;
  // [shared trip] -> member legs
  std::vector<std::vector<LegRef>> shared_members;

  std::vector<int> route_offset;  // first z variable of each route
  int flow_count = 0;

  int route_count() const { return static_cast<int>(route_commute.size()); }
  int commute_count() const { return static_cast<int>(routes_of_commute.size()); }
  int leg_count(int route) const { return static_cast<int>(legs[route].size()); }
  int z_index(int route, int leg, int t) const {
    return route_offset[route] + leg * intervals + t;
  }
  const ResolvedLeg& leg(LegRef ref) const { return legs[ref.route][ref.leg]; }
};

// Resolves ids and builds all leg sets. Expects a validated scenario; a
// boarding or alighting stop missing from its line throws Error.
LegIndex classify_legs(const Scenario& scenario);

}  // namespace tcmum
