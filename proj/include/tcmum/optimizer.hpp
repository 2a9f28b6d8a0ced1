#pragma once

// First-order design optimization: successive trust-region LPs around the
// current design with the choice probabilities linearized, restarted from
// random feasible designs.

#include <cstdint>
#include <optional>
#include <vector>

#include "tcmum/choice.hpp"
#include "tcmum/evaluation.hpp"
#include "tcmum/flows.hpp"
#include "tcmum/leg_index.hpp"
#include "tcmum/model.hpp"

namespace tcmum {

struct StepResult {
  DesignPoint design;
  double q_tilde = 0.0;  // optimal value of the step LP
  int lp_solves = 0;
};

// One step LP around `anchor` using the steps in scenario.algorithm. Bus
// departures move on the integer grid within +-rho_bus: the neighbourhood is
// enumerated when it has at most bus_enumeration_limit points, otherwise the
// relaxation is rounded and the LP re-solved with buses fixed. Closed bus
// services use a secant over one departure in place of the gradient.
// `anchor_flows` are the inner-LP flows at the anchor, needed only when wait
// terms are linearized; they are computed when omitted.
StepResult first_order_step(const Scenario& scenario, const LegIndex& index,
                            const DesignPoint& anchor,
                            const BoardingFlows* anchor_flows = nullptr);
StepResult first_order_step(const Scenario& scenario, const DesignPoint& anchor,
                            const OptimizerParams& params);

struct Iterate {
  DesignPoint design;
  double q_tilde = 0.0;
  double true_objective = 0.0;
  double threshold = 0.0;  // |Q~_i - Q~_{i-1}|, Q~_0 = 0
  int violations = 0;      // check_design_feasibility count
};

struct Trajectory {
  DesignPoint start;
  double start_objective = 0.0;
  std::vector<Iterate> iterates;
  bool converged = false;

  int iterations() const { return static_cast<int>(iterates.size()); }
  const DesignPoint& final_design() const {
    return iterates.empty() ? start : iterates.back().design;
  }
  double final_objective() const {
    return iterates.empty() ? start_objective : iterates.back().true_objective;
  }
};

// Algorithm 1 from a feasible start: stop once |Q~_i - Q~_{i-1}| <= epsilon
// or after max_iterations steps. Every iterate is evaluated exactly.
Trajectory optimize(const Scenario& scenario, const LegIndex& index, const DesignPoint& start);
Trajectory optimize(const Scenario& scenario, const DesignPoint& start);

// Random feasible design from a 64-bit seed: uniform rates rescaled into the
// budgets (bus rates floored to integers), Dirichlet split of a uniform
// fleet total per interval, uniform lambda.
DesignPoint random_start(const Scenario& scenario, std::uint64_t seed);

struct MultiStartResult {
  DesignPoint best;
  double best_objective = 0.0;
  int best_start = 0;
  std::vector<Trajectory> trajectories;
};

// Runs `starts` trajectories (start k seeded with seed + k) on up to `jobs`
// threads; the best final design by exact objective wins, ties to the lower
// start index.
MultiStartResult multi_start(const Scenario& scenario, int jobs = 1);

}  // namespace tcmum
