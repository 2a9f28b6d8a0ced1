#pragma once

#include <string>
#include <vector>

#include "tcmum/model.hpp"

namespace tcmum {

struct PairTiming {
  double wait_s = 0.0;   // extra wait of the second pickup
  double delay_s = 0.0;  // worst arrival delay over both parties
};

// Best pickup order for two first-mile riders heading to `station`, assuming
// straight-line driving at `speed_mph`.
PairTiming first_mile_pair(const Point& a, const Point& b, const Point& station,
                           double speed_mph);
// Best drop-off order for two last-mile riders leaving `station`.
PairTiming last_mile_pair(const Point& a, const Point& b, const Point& station,
                          double speed_mph);

struct SharingScenarios {
  std::vector<SharedTrip> trips;
  std::vector<CommuteRoute> routes;  // original routes followed by variants
};

// Pairs first-mile (resp. last-mile) AMoD legs at `station_id` whose pickup
// wait stays within `max_wait_s` and whose delay stays within `max_delay_s`.
// Each pair yields one shared trip and one shared copy of both routes with
// vehicle discount 1/2 on the shared leg. Only two-party sharing is
// supported; other `max_parties` values throw std::invalid_argument.
SharingScenarios generate_sharing_scenarios(const Scenario& scenario,
                                            const std::string& station_id,
                                            double max_wait_s,
                                            double max_delay_s,
                                            int max_parties = 2);

// Returns a copy of the scenario with the generated trips and routes added.
Scenario with_sharing(const Scenario& scenario, const SharingScenarios& sharing);

}  // namespace tcmum
