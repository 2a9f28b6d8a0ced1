#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "tcmum/choice.hpp"
#include "tcmum/flows.hpp"
#include "tcmum/leg_index.hpp"
#include "tcmum/model.hpp"

namespace tcmum {

// Minutes summed over all commuters.
struct ObjectiveBreakdown {
  double transit_expected_wait = 0.0;
  double transit_excess_wait = 0.0;
  double walk = 0.0;
  double amod_expected_wait = 0.0;
  double amod_excess_wait = 0.0;
  // demand with no available route at its departure interval, waiting to T
  double stranded_wait = 0.0;

  double excess_wait() const {
    return transit_excess_wait + amod_excess_wait + stranded_wait;
  }
  double total() const {
    return transit_expected_wait + transit_excess_wait + walk + amod_expected_wait +
           amod_excess_wait + stranded_wait;
  }
};

// Assembles every objective term from its definition (cumulative arrival,
// transfer and boarding counts) rather than from LP coefficients.
ObjectiveBreakdown objective_breakdown(const Scenario& scenario, const LegIndex& index,
                                       const BoardingFlows& flows,
                                       const ThetaMatrix& theta,
                                       const DesignPoint& design,
                                       bool shared = true);

struct ModeShares {
  double amod_local = 0.0;
  double bus_local = 0.0;
  double amod_rail_dt = 0.0;
  double bus_rail_dt = 0.0;
  double rail_dt = 0.0;
};

struct EvaluationReport {
  double objective = 0.0;     // minutes, all commuters
  double total_demand = 0.0;
  double avg_disutility = 0.0;  // minutes per commuter
  double avg_walking = 0.0;
  double avg_waiting = 0.0;       // expected wait
  double avg_excess_waiting = 0.0;
  double avg_utility = 0.0;  // dollars, demand-weighted chosen-route utility
  double line_utilization = 0.0;
  double amod_utilization = 0.0;
  double lambda_star = 0.0;
  ModeShares shares;  // fractions of routed demand per commuter kind
  double unserved_local = 0.0;
  double unserved_dt = 0.0;
};

struct Evaluation {
  BoardingFlows flows;
  ChoiceField choice;
  ObjectiveBreakdown breakdown;
  EvaluationReport report;
  double lp_objective = 0.0;
};

// True evaluation: theta(x, N, lambda) from the choice model, then the inner
// LP with theta fixed. Throws Error listing violations for an infeasible
// design, and lp::SolverError if the inner LP cannot be solved.
Evaluation evaluate_design(const Scenario& scenario, const LegIndex& index,
                           const DesignPoint& design);
Evaluation evaluate_design(const Scenario& scenario, const DesignPoint& design);

// Route label used for the mode-share columns.
enum class ShareClass { kAmodLocal, kBusLocal, kAmodRail, kBusRail, kRail };
ShareClass share_class(const Scenario& scenario, int route);

struct OracleResult {
  DesignPoint best;
  double best_objective = 0.0;
  std::size_t grid_size = 0;
  std::vector<double> objectives;  // NaN for infeasible points
};

// Levels of a time-invariant design grid: every interval gets the same value.
struct DesignGrid {
  std::vector<std::vector<double>> line_levels;     // per line
  std::vector<std::vector<double>> station_levels;  // per station
  std::vector<double> lambda_levels;

  std::size_t size() const;
  std::vector<DesignPoint> expand(const Scenario& scenario) const;
};

// Evaluates every candidate (skipping infeasible ones) and returns the
// minimum; ties go to the earliest candidate. `jobs` > 1 evaluates in
// parallel with a deterministic reduction. Throws Error if nothing is
// feasible.
OracleResult grid_oracle(const Scenario& scenario, const std::vector<DesignPoint>& points,
                         int jobs = 1);

struct BoardingOracleResult {
  double objective = 0.0;
  BoardingFlows flows;
  std::size_t schedules = 0;  // size of the searched product space
};

// Exhaustive search over integral boarding schedules with the design and
// theta fixed. Refuses (Error with the size estimate) above `limit`.
BoardingOracleResult enumerate_boarding_oracle(const Scenario& scenario,
                                               const LegIndex& index,
                                               const ThetaMatrix& theta,
                                               const DesignPoint& design,
                                               std::size_t limit = 1000000);

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace tcmum
