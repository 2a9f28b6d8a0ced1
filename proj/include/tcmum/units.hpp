#pragma once

#include <cmath>

namespace tcmum::units {

inline constexpr double kKmPerMile = 1.609344;

constexpr double miles_to_km(double miles) { return miles * kKmPerMile; }
constexpr double km_to_miles(double km) { return km / kKmPerMile; }
constexpr double mph_to_kmh(double mph) { return mph * kKmPerMile; }

// Minutes needed to cover `km` at `mph`.
inline double travel_minutes(double km, double mph) {
  return km / mph_to_kmh(mph) * 60.0;
}

// Dollars per hour to dollars per minute.
constexpr double per_minute(double per_hour) { return per_hour / 60.0; }

// Whole intervals a passenger spends on a leg of `minutes` before being
// available downstream.
inline int interval_shift(double minutes, double delta_t) {
  if (minutes <= 0.0) return 0;
  return static_cast<int>(std::ceil(minutes / delta_t - 1e-9));
}

}  // namespace tcmum::units
