#pragma once

#include <string>
#include <vector>

#include "tcmum/model.hpp"

namespace tcmum {

struct DesignViolation {
  std::string constraint;  // e.g. "bus budget", "x[3][B2] upper bound"
  double excess = 0.0;     // amount by which the constraint is exceeded
  std::string message() const;
};

// Absolute slack tolerated before a constraint is reported.
inline constexpr double kDesignTolerance = 1e-6;

// Empty iff the design lies in the relaxed feasible sets for x and N with
// lambda inside its bounds. Throws Error on a dimension mismatch.
std::vector<DesignViolation> check_design_feasibility(
    const Scenario& scenario, const DesignPoint& design,
    double tolerance = kDesignTolerance);

// Elementwise floor of a nonnegative allocation matrix. Floors of a feasible
// allocation stay feasible since every per-interval total only shrinks.
std::vector<std::vector<long long>> round_allocation(
    const std::vector<std::vector<double>>& allocation);

// Same floor applied to the N block of a design.
DesignPoint round_allocation(const DesignPoint& design);

}  // namespace tcmum
