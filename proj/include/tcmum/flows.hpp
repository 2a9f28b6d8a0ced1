#pragma once

// Boarding-flow LPs: the inner problem Q(x, N, theta) with the design fixed,
// and the per-iteration trust-region LP where x, N and lambda move too.
//
// Boarding variable z(r, i, t) counts commuters of route r boarding leg i
// with a service starting in interval t (0-based). Excess waiting follows
// the cumulative arrival/transfer/boarding accounting, which collapses to
//   Delta * sum_t d_t (T - t)                          (constant)
//   - Delta * (T - t)               per boarding z(r, i, t)
//   + Delta * max(0, T - t - shift) per boarding with a next leg
// on top of expected wait and first-leg walking.

#include <optional>
#include <vector>

#include "tcmum/choice.hpp"
#include "tcmum/leg_index.hpp"
#include "tcmum/lp/linear_program.hpp"
#include "tcmum/model.hpp"

namespace tcmum {

struct BoardingFlows {
  std::vector<double> z;  // LegIndex::z_index layout

  double at(const LegIndex& index, int route, int leg, int t) const {
    return z[index.z_index(route, leg, t)];
  }
};

// [route][t] fixed route-choice probabilities.
using ThetaMatrix = std::vector<std::vector<double>>;

struct InnerLp {
  lp::LinearProgram model;  // z(r,i,t) is LP variable z_index(r,i,t)
  std::vector<int> capacity_rows;
  std::vector<int> availability_rows;
};

// Expected-wait coefficient of one boarding, minutes; 0 when the leg's
// service is absent (the boarding is then forced to zero anyway).
double expected_wait(const Scenario& scenario, const ResolvedLeg& leg, int t,
                     const DesignPoint& design);

// Objective coefficient of z(r, i, t) with the given expected wait.
double boarding_cost(const Scenario& scenario, const LegIndex& index, int route,
                     int leg, int t, double wait);

// Delta * sum over commutes and t of d_t (T - t).
double arrival_wait_constant(const Scenario& scenario);

InnerLp build_inner_lp(const Scenario& scenario, const LegIndex& index,
                       const ThetaMatrix& theta, const DesignPoint& design,
                       bool shared = true);

struct IterationLpOptions {
  // Fix bus departures at the anchor instead of letting them move by rho_bus.
  bool fix_bus = false;
  // Add z~ * dc/dx * (x - x~) for the expected-wait products, using the
  // anchor's inner-LP flows.
  bool linearize_wait_terms = false;
  bool shared = true;
};

struct IterationLp {
  lp::LinearProgram model;
  std::vector<int> design_var;  // DesignPoint flat id -> LP variable
};

IterationLp build_iteration_lp(const Scenario& scenario, const LegIndex& index,
                               const AffineTheta& theta_hat,
                               const IterationLpOptions& options,
                               const BoardingFlows* anchor_flows = nullptr);

// Reads the design variables back out of an iteration LP solution.
DesignPoint extract_design(const IterationLp& lp, const std::vector<double>& x,
                           const DesignPoint& shape);
BoardingFlows extract_flows(const LegIndex& index, const std::vector<double>& x);

}  // namespace tcmum
