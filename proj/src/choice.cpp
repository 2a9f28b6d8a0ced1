#include "tcmum/choice.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace tcmum {
namespace {

constexpr int kNestCount = 3;

int nest_of(ModeClass m) { return static_cast<int>(m); }

double nest_scale(const ChoiceModelSpec& spec, int nest) {
  switch (nest) {
    case 0: return spec.phi_transit;
    case 1: return spec.phi_amod;
    default: return spec.phi_mixed;
  }
}

// Nest assignment and scales for either model: MNL is a single nest at scale
// phi, which makes the nested formulas reduce to plain softmax.
struct Nesting {
  std::vector<int> nest;
  std::array<double, kNestCount> scale{};
  double upper = 1.0;
};

Nesting nesting(std::span<const ModeClass> nests, const ChoiceModelSpec& spec,
                std::size_t n) {
  Nesting out;
  out.nest.assign(n, 0);
  if (spec.kind == ChoiceKind::kMultinomial) {
    out.scale.fill(spec.phi);
    out.upper = spec.phi;
    return out;
  }
  for (std::size_t r = 0; r < n; ++r) out.nest[r] = nest_of(nests[r]);
  for (int m = 0; m < kNestCount; ++m) out.scale[m] = nest_scale(spec, m);
  out.upper = spec.phi;
  return out;
}

std::vector<double> nested_probs(std::span<const double> u, const Nesting& nest) {
  const std::size_t n = u.size();
  std::array<double, kNestCount> top;
  top.fill(kUnavailable);
  for (std::size_t r = 0; r < n; ++r)
    if (u[r] != kUnavailable) top[nest.nest[r]] = std::max(top[nest.nest[r]], u[r]);

  std::array<double, kNestCount> sum{};
  for (std::size_t r = 0; r < n; ++r) {
    if (u[r] == kUnavailable) continue;
    const int m = nest.nest[r];
    sum[m] += std::exp(nest.scale[m] * (u[r] - top[m]));
  }
  std::array<double, kNestCount> logsum;
  double best = kUnavailable;
  for (int m = 0; m < kNestCount; ++m) {
    logsum[m] = top[m] == kUnavailable
                    ? kUnavailable
                    : top[m] + std::log(sum[m]) / nest.scale[m];
    best = std::max(best, logsum[m]);
  }
  if (best == kUnavailable) throw Error("no available route for commute");

  std::array<double, kNestCount> upper{};
  double total = 0.0;
  for (int m = 0; m < kNestCount; ++m) {
    if (logsum[m] == kUnavailable) continue;
    upper[m] = std::exp(nest.upper * (logsum[m] - best));
    total += upper[m];
  }
  std::vector<double> theta(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    if (u[r] == kUnavailable) continue;
    const int m = nest.nest[r];
    const double within = std::exp(nest.scale[m] * (u[r] - top[m])) / sum[m];
    theta[r] = upper[m] / total * within;
  }
  return theta;
}

void add_scaled(std::map<int, double>& acc, const SparseGrad& g, double w) {
  for (const auto& [id, v] : g) acc[id] += w * v;
}

}  // namespace

std::vector<double> choice_probs_mnl(std::span<const double> utilities, double scale) {
  ChoiceModelSpec spec;
  spec.kind = ChoiceKind::kMultinomial;
  spec.phi = scale;
  return nested_probs(utilities, nesting({}, spec, utilities.size()));
}

std::vector<double> choice_probs_nested(std::span<const double> utilities,
                                        std::span<const ModeClass> nests,
                                        const ChoiceModelSpec& spec) {
  if (nests.size() != utilities.size())
    throw std::invalid_argument("nest list does not match utilities");
  ChoiceModelSpec nested = spec;
  nested.kind = ChoiceKind::kNested;
  return nested_probs(utilities, nesting(nests, nested, utilities.size()));
}

std::vector<double> choice_probs(std::span<const double> utilities,
                                 std::span<const ModeClass> nests,
                                 const ChoiceModelSpec& spec) {
  return nested_probs(utilities, nesting(nests, spec, utilities.size()));
}

std::vector<SparseGrad> choice_probs_gradient(std::span<const double> theta,
                                              std::span<const SparseGrad> du,
                                              std::span<const ModeClass> nests,
                                              const ChoiceModelSpec& spec) {
  const std::size_t n = theta.size();
  const auto nest = nesting(nests, spec, n);
  // P(m) and the within-nest mean utility derivative of each nest.
  std::array<double, kNestCount> share{};
  for (std::size_t r = 0; r < n; ++r) share[nest.nest[r]] += theta[r];
  std::array<std::map<int, double>, kNestCount> mean;
  for (std::size_t r = 0; r < n; ++r) {
    const int m = nest.nest[r];
    if (theta[r] > 0.0) add_scaled(mean[m], du[r], theta[r] / share[m]);
  }
  std::map<int, double> overall;
  for (int m = 0; m < kNestCount; ++m)
    for (const auto& [id, v] : mean[m]) overall[id] += share[m] * v;

  std::vector<SparseGrad> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (!(theta[r] > 0.0)) continue;
    const int m = nest.nest[r];
    const double phi_m = nest.scale[m];
    std::map<int, double> acc;
    add_scaled(acc, du[r], phi_m);
    for (const auto& [id, v] : mean[m]) acc[id] += (nest.upper - phi_m) * v;
    for (const auto& [id, v] : overall) acc[id] -= nest.upper * v;
    for (const auto& [id, v] : acc) out[r].emplace_back(id, theta[r] * v);
  }
  return out;
}

ChoiceModel::ChoiceModel(const Scenario& scenario, const LegIndex& index)
    : scenario_(&scenario), index_(&index), utility_(scenario, index) {}

void ChoiceModel::fill(int commute, int t, const DesignPoint& design,
                       GradientPolicy policy, ChoiceField& out) const {
  const auto& routes = index_->routes_of_commute[commute];
  std::vector<double> u;
  std::vector<ModeClass> nests;
  bool any = false;
  bool all = true;
  for (int r : routes) {
    u.push_back(utility_.utility(r, t, design));
    nests.push_back(scenario_->routes[r].mode_class);
    out.utility[r][t] = u.back();
    any = any || u.back() != kUnavailable;
    all = all && u.back() != kUnavailable;
  }
  if (policy == GradientPolicy::kStrict && !all)
    throw Error("nondifferentiable at boundary: commute '" +
                scenario_->commutes[commute].id + "' at t=" + std::to_string(t));
  if (!any) {
    out.stranded[commute][t] = 1;
    for (int r : routes) out.theta[r][t] = 0.0;
    return;
  }
  const auto theta = choice_probs(u, nests, scenario_->choice);
  for (std::size_t k = 0; k < routes.size(); ++k) out.theta[routes[k]][t] = theta[k];
  if (policy == GradientPolicy::kNone) return;

  std::vector<SparseGrad> du(routes.size());
  for (std::size_t k = 0; k < routes.size(); ++k)
    if (u[k] != kUnavailable) du[k] = utility_.utility_gradient(routes[k], t, design);
  auto grad = choice_probs_gradient(theta, du, nests, scenario_->choice);
  for (std::size_t k = 0; k < routes.size(); ++k)
    out.grad[routes[k]][t] = std::move(grad[k]);
}

ChoiceField ChoiceModel::field(const DesignPoint& design, GradientPolicy policy) const {
  const int T = index_->intervals;
  const int R = index_->route_count();
  ChoiceField out;
  out.intervals = T;
  out.theta.assign(R, std::vector<double>(T, 0.0));
  out.utility.assign(R, std::vector<double>(T, kUnavailable));
  out.stranded.assign(index_->commute_count(), std::vector<char>(T, 0));
  if (policy != GradientPolicy::kNone)
    out.grad.assign(R, std::vector<SparseGrad>(T));
  for (int c = 0; c < index_->commute_count(); ++c) {
    if (index_->routes_of_commute[c].empty()) {
      out.stranded[c].assign(T, 1);
      continue;
    }
    for (int t = 0; t < T; ++t) fill(c, t, design, policy, out);
  }
  return out;
}

std::vector<double> ChoiceModel::probabilities(int commute, int t,
                                               const DesignPoint& design) const {
  const auto& routes = index_->routes_of_commute[commute];
  std::vector<double> u;
  std::vector<ModeClass> nests;
  for (int r : routes) {
    u.push_back(utility_.utility(r, t, design));
    nests.push_back(scenario_->routes[r].mode_class);
  }
  return choice_probs(u, nests, scenario_->choice);
}

std::vector<SparseGrad> ChoiceModel::gradient(int commute, int t,
                                              const DesignPoint& design) const {
  const auto& routes = index_->routes_of_commute[commute];
  std::vector<double> u;
  std::vector<ModeClass> nests;
  std::vector<SparseGrad> du;
  for (int r : routes) {
    u.push_back(utility_.utility(r, t, design));
    if (u.back() == kUnavailable)
      throw Error("nondifferentiable at boundary: commute '" +
                  scenario_->commutes[commute].id + "' at t=" + std::to_string(t));
    nests.push_back(scenario_->routes[r].mode_class);
    du.push_back(utility_.utility_gradient(r, t, design));
  }
  const auto theta = choice_probs(u, nests, scenario_->choice);
  return choice_probs_gradient(theta, du, nests, scenario_->choice);
}

std::vector<SparseGrad> choice_gradient(const Scenario& scenario,
                                        const DesignPoint& design, int commute, int t) {
  const auto index = classify_legs(scenario);
  return ChoiceModel(scenario, index).gradient(commute, t, design);
}

AffineTheta::AffineTheta(DesignPoint anchor, ChoiceField field)
    : anchor_(std::move(anchor)), field_(std::move(field)) {}

double AffineTheta::value(int route, int t, const DesignPoint& design) const {
  double v = field_.theta[route][t];
  if (!field_.grad.empty())
    for (const auto& [id, g] : field_.grad[route][t])
      v += g * (design.value(id) - anchor_.value(id));
  return v;
}

AffineTheta linearize_theta(const ChoiceModel& model, const DesignPoint& anchor,
                            GradientPolicy policy) {
  if (policy == GradientPolicy::kNone) policy = GradientPolicy::kStrict;
  return AffineTheta(anchor, model.field(anchor, policy));
}

}  // namespace tcmum
