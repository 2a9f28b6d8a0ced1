#pragma once

// Multinomial and nested logit route choice, gradients w.r.t. the design and
// the first-order (affine) model of theta used by the step LP.

#include <span>
#include <vector>

#include "tcmum/leg_index.hpp"
#include "tcmum/model.hpp"
#include "tcmum/pricing.hpp"

namespace tcmum {

// Softmax of scale * u over available entries (kUnavailable -> 0). Throws
// Error("no available route for commute") when nothing is available.
std::vector<double> choice_probs_mnl(std::span<const double> utilities,
                                     double scale = 1.0);

// Two-level nested logit with nests given by mode class. Empty nests do not
// enter the upper level.
std::vector<double> choice_probs_nested(std::span<const double> utilities,
                                        std::span<const ModeClass> nests,
                                        const ChoiceModelSpec& spec);

// Dispatches on spec.kind (MNL uses spec.phi as its scale).
std::vector<double> choice_probs(std::span<const double> utilities,
                                 std::span<const ModeClass> nests,
                                 const ChoiceModelSpec& spec);

// d theta / d v for every alternative given theta, the utility derivatives
// of each alternative, and the nest structure. Unavailable alternatives
// (theta = 0) get an empty gradient.
std::vector<SparseGrad> choice_probs_gradient(std::span<const double> theta,
                                              std::span<const SparseGrad> du,
                                              std::span<const ModeClass> nests,
                                              const ChoiceModelSpec& spec);

enum class GradientPolicy {
  kNone,    // probabilities only
  kStrict,  // throw "nondifferentiable at boundary" if any route is unavailable
  kLimit,   // unavailable routes keep theta = 0 with zero gradient
};

struct ChoiceField {
  int intervals = 0;
  std::vector<std::vector<double>> theta;      // [route][t]
  std::vector<std::vector<double>> utility;    // [route][t], kUnavailable if so
  std::vector<std::vector<SparseGrad>> grad;   // [route][t]; empty if kNone
  std::vector<std::vector<char>> stranded;     // [commute][t], no route available
};

class ChoiceModel {
 public:
  ChoiceModel(const Scenario& scenario, const LegIndex& index);

  ChoiceField field(const DesignPoint& design,
                    GradientPolicy policy = GradientPolicy::kNone) const;
  // Probabilities of the routes of one commute at t (route order of the
  // commute); throws when no route is available.
  std::vector<double> probabilities(int commute, int t, const DesignPoint& design) const;
  // Strict gradient for one commute at t, one entry per route of the commute.
  std::vector<SparseGrad> gradient(int commute, int t, const DesignPoint& design) const;

  const UtilityModel& utilities() const { return utility_; }
  const LegIndex& index() const { return *index_; }

 private:
  void fill(int commute, int t, const DesignPoint& design, GradientPolicy policy,
            ChoiceField& out) const;

  const Scenario* scenario_;
  const LegIndex* index_;
  UtilityModel utility_;
};

std::vector<SparseGrad> choice_gradient(const Scenario& scenario,
                                        const DesignPoint& design, int commute, int t);

// theta_hat(v) = theta(anchor) + grad . (v - anchor), per (route, t).
class AffineTheta {
 public:
  AffineTheta(DesignPoint anchor, ChoiceField field);

  double value(int route, int t, const DesignPoint& design) const;
  double constant(int route, int t) const { return field_.theta[route][t]; }
  const SparseGrad& slope(int route, int t) const { return field_.grad[route][t]; }
  SparseGrad& slope(int route, int t) { return field_.grad[route][t]; }
  const DesignPoint& anchor() const { return anchor_; }
  const ChoiceField& field() const { return field_; }

 private:
  DesignPoint anchor_;
  ChoiceField field_;
};

// Linearizes theta at the anchor with the given boundary policy.
AffineTheta linearize_theta(const ChoiceModel& model, const DesignPoint& anchor,
                            GradientPolicy policy = GradientPolicy::kStrict);

}  // namespace tcmum
