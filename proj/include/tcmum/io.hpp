#pragma once

// Scenario bundles (JSON), CSV inputs and outputs, demand generation, fleet
// equivalence rules and the sensitivity sweep.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tcmum/evaluation.hpp"
#include "tcmum/model.hpp"

namespace tcmum {

// Parse or field error; the message carries the line or field path.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Parses a bundle without validating it. `base_dir` resolves a relative
// `demand_csv` reference.
Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".");
// Reads, parses and validates (ValidationError lists every violation).
Scenario load_scenario(const std::string& path);
// Canonical serialization; parse_scenario(emit_scenario(s)) == s.
std::string emit_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::string& path);

// Demand CSV with header commute_id,t,demand (t zero-based). Listed entries
// overwrite the commutes' demand vectors.
void apply_demand_csv(Scenario& scenario, std::istream& in);
void write_demand_csv(const Scenario& scenario, std::ostream& out);

// Design files: one row per variable, kind,index,value with kind x (index
// line@t), N (station@t) or lambda.
void write_design_csv(const Scenario& scenario, const DesignPoint& design, std::ostream& out);
DesignPoint read_design_csv(const Scenario& scenario, std::istream& in);
DesignPoint load_design(const Scenario& scenario, const std::string& path);

struct ReportRow {
  double gamma = 1.0;
  double n_bar = 0.0;
  double psi = 0.0;
  std::uint64_t seed = 0;
  EvaluationReport report;
  std::string error;  // set when the cell failed; metrics are then blank
};
std::string report_header();
std::string report_line(const ReportRow& row);

// line,t,departures,headway_min,pattern
void write_frequency_profile(const Scenario& scenario, const DesignPoint& design,
                             std::ostream& out);
// "2 departures per 3 intervals" for 1.5; empty if no small ratio fits.
std::string departure_pattern(double departures);

struct DemandSeed {
  std::vector<std::vector<double>> weights;  // per commute, per interval
  std::vector<CommuteKind> kinds;
  double total_demand = 0.0;
  double jitter = 0.0;  // multiplicative noise half-width, 0 = none

  // Current demand of each commute as weights, total = scenario total.
  static DemandSeed from_scenario(const Scenario& scenario);
};

// Downtown demand sums to total*psi and local demand to total*(1-psi),
// split proportionally to the (optionally jittered) weights.
std::vector<std::vector<double>> generate_demand(const DemandSeed& seed, double psi,
                                                 std::uint64_t rng_seed);

enum class FleetRule { kPce, kCce };
FleetRule parse_fleet_rule(const std::string& name);
// Removed buses round(B_bus (1 - gamma) / hours), half up; PCE gives two
// vehicles per bus and CCE four.
double equivalent_fleet(double gamma, double bus_budget, double horizon_h, FleetRule rule);

struct SweepSpec {
  std::string base_scenario;
  std::string output;
  std::uint64_t seed = 42;
  std::vector<double> gammas{1.0};
  std::vector<double> psis;                // empty: keep the base demand
  std::optional<FleetRule> fleet_rule;     // else explicit fleet sizes
  std::vector<double> fleet_sizes;         // empty with no rule: base N_bar
  std::optional<double> total_demand;      // default: base scenario total
  std::optional<int> starts;
  double jitter = 0.0;
};
SweepSpec load_sweep_spec(const std::string& path);

struct SweepCell {
  double gamma = 1.0;
  std::optional<double> psi;
  double n_bar = 0.0;
};
std::vector<SweepCell> sweep_cells(const SweepSpec& spec, const Scenario& base);
// Scenario of one cell: bus budget scaled by gamma, fleet set, demand
// regenerated when psi is given.
Scenario sweep_scenario(const Scenario& base, const SweepSpec& spec, const SweepCell& cell);

struct SweepSummary {
  int cells = 0;
  int skipped = 0;  // already present in the output
  int solved = 0;
  int failed = 0;
};
// Appends one report row per missing cell in spec order; rows already in
// the output are kept and skipped.
SweepSummary run_sweep(const SweepSpec& spec, int jobs = 1);

// Grid file: {"lines": {id: [levels]}, "stations": {id: [levels]},
// "lambda": [levels]}. Every line and station needs levels.
DesignGrid parse_design_grid(const Scenario& scenario, const std::string& text);
DesignGrid load_design_grid(const Scenario& scenario, const std::string& path);

// Downtown fraction of total demand (0 when there is no demand).
double downtown_share(const Scenario& scenario);

// Reads TCMUM_JOBS, defaulting to 1.
int default_jobs();

}  // namespace tcmum
