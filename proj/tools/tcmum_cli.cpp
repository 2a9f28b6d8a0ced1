// tcmum: batch front end for scenario validation, design optimization,
// evaluation, sweeps and oracles.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 invalid scenario or
// design, 3 solver failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tcmum/evaluation.hpp"
#include "tcmum/feasibility.hpp"
#include "tcmum/io.hpp"
#include "tcmum/lp/linear_program.hpp"
#include "tcmum/optimizer.hpp"
#include "tcmum/pricing.hpp"
#include "tcmum/units.hpp"
#include "tcmum/validate.hpp"

namespace {

using namespace tcmum;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kInvalid = 2;
constexpr int kSolver = 3;

class InvalidDesign : public Error {
 public:
  using Error::Error;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

void require_feasible(const Scenario& s, const DesignPoint& d) {
  const auto v = check_design_feasibility(s, d);
  if (v.empty()) return;
  std::string msg = "design is infeasible:";
  for (const auto& x : v) msg += "\n  " + x.message();
  throw InvalidDesign(msg);
}

ReportRow solved_row(const Scenario& s, const EvaluationReport& report) {
  ReportRow row;
  row.gamma = 1.0;
  row.n_bar = s.budgets.fleet_size;
  row.psi = downtown_share(s);
  row.seed = s.algorithm.seed;
  row.report = report;
  return row;
}

int cmd_validate(const std::string& path) {
  const auto s = load_scenario(path);
  std::cout << "ok: " << s.line_count() << " lines, " << s.station_count() << " stations, "
            << s.commutes.size() << " commutes, " << s.routes.size() << " routes, T="
            << s.intervals() << "\n";
  return kOk;
}

struct SolveArgs {
  std::string scenario;
  std::optional<unsigned long long> seed;
  std::optional<int> starts;
  std::string out = "tcmum_solution";
  int jobs = 1;
};

int cmd_solve(const SolveArgs& a) {
  auto s = load_scenario(a.scenario);
  if (a.seed) s.algorithm.seed = *a.seed;
  if (a.starts) s.algorithm.starts = *a.starts;
  std::fprintf(stderr, "solve: seed=%llu starts=%d\n", s.algorithm.seed, s.algorithm.starts);
  const auto result = multi_start(s, a.jobs);
  const auto ev = evaluate_design(s, result.best);

  {
    auto out = open_out(a.out + ".design.csv");
    out << "# tcmum solve seed=" << s.algorithm.seed << '\n';
    write_design_csv(s, result.best, out);
  }
  {
    auto out = open_out(a.out + ".report.csv");
    out << "# tcmum solve seed=" << s.algorithm.seed << '\n';
    out << report_header() << '\n' << report_line(solved_row(s, ev.report)) << '\n';
  }
  {
    auto out = open_out(a.out + ".trajectory.csv");
    out << "# tcmum solve seed=" << s.algorithm.seed << '\n';
    out << "start,iteration,q_tilde,true_objective,threshold,converged\n";
    for (std::size_t k = 0; k < result.trajectories.size(); ++k) {
      const auto& tr = result.trajectories[k];
      char buf[160];
      std::snprintf(buf, sizeof buf, "%zu,0,,%.10g,,\n", k, tr.start_objective);
      out << buf;
      for (int i = 0; i < tr.iterations(); ++i) {
        const auto& it = tr.iterates[i];
        std::snprintf(buf, sizeof buf, "%zu,%d,%.10g,%.10g,%.10g,%d\n", k, i + 1, it.q_tilde,
                      it.true_objective, it.threshold,
                      (tr.converged && i + 1 == tr.iterations()) ? 1 : 0);
        out << buf;
      }
    }
  }
  {
    auto out = open_out(a.out + ".frequencies.csv");
    write_frequency_profile(s, result.best, out);
  }
  int converged = 0;
  for (const auto& tr : result.trajectories) converged += tr.converged ? 1 : 0;
  std::printf("best start %d of %zu, objective %.6f min, %.4f min per commuter\n",
              result.best_start, result.trajectories.size(), result.best_objective,
              ev.report.avg_disutility);
  std::printf("converged %d of %zu starts\n", converged, result.trajectories.size());
  std::printf("wrote %s.{design,report,trajectory,frequencies}.csv\n", a.out.c_str());
  return kOk;
}

int cmd_evaluate(const std::string& path, const std::string& design_path,
                 const std::string& out_path) {
  const auto s = load_scenario(path);
  const auto d = load_design(s, design_path);
  require_feasible(s, d);
  const auto ev = evaluate_design(s, d);
  std::ostringstream text;
  text << report_header() << '\n' << report_line(solved_row(s, ev.report)) << '\n';
  if (out_path.empty()) {
    std::cout << text.str();
  } else {
    auto out = open_out(out_path);
    out << text.str();
  }
  return kOk;
}

int cmd_sweep(const std::string& spec_path, int jobs) {
  const auto spec = load_sweep_spec(spec_path);
  std::fprintf(stderr, "sweep: seed=%llu\n", static_cast<unsigned long long>(spec.seed));
  const auto sum = run_sweep(spec, jobs);
  std::printf("%d cells: %d solved, %d failed, %d already present\n", sum.cells, sum.solved,
              sum.failed, sum.skipped);
  return kOk;
}

int cmd_oracle(const std::string& path, const std::string& grid_path,
               const std::string& out_path, int jobs) {
  const auto s = load_scenario(path);
  const auto grid = load_design_grid(s, grid_path);
  const auto points = grid.expand(s);
  const auto res = grid_oracle(s, points, jobs);
  std::size_t feasible = 0;
  for (double v : res.objectives) feasible += std::isnan(v) ? 0 : 1;
  std::printf("grid %zu points, %zu feasible, best objective %.6f min\n", res.grid_size,
              feasible, res.best_objective);
  if (out_path.empty()) {
    write_design_csv(s, res.best, std::cout);
  } else {
    auto out = open_out(out_path);
    write_design_csv(s, res.best, out);
  }
  return kOk;
}

int cmd_fares(double miles, double minutes, const std::string& scenario) {
  FareSchedule fares;
  if (!scenario.empty()) fares = load_scenario(scenario).fares;
  std::printf("%.2f\n", amod_fare(fares, units::miles_to_km(miles), minutes));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transit and AMoD joint design"};
  app.require_subcommand(1);

  std::string scn;
  auto* validate = app.add_subcommand("validate", "check a scenario bundle");
  validate->add_option("scenario", scn)->required();

  SolveArgs solve_args;
  solve_args.jobs = default_jobs();
  auto* solve = app.add_subcommand("solve", "multi-start design optimization");
  solve->add_option("scenario", solve_args.scenario)->required();
  solve->add_option("--seed", solve_args.seed, "64-bit RNG seed");
  solve->add_option("--starts", solve_args.starts)->check(CLI::PositiveNumber);
  solve->add_option("--out", solve_args.out, "output file prefix");
  solve->add_option("--jobs", solve_args.jobs)->check(CLI::PositiveNumber);

  std::string design, out;
  auto* evaluate = app.add_subcommand("evaluate", "exact evaluation of a design");
  evaluate->add_option("scenario", scn)->required();
  evaluate->add_option("--design", design)->required();
  evaluate->add_option("--out", out, "report CSV (default stdout)");

  std::string spec;
  int jobs = default_jobs();
  auto* sweep = app.add_subcommand("sweep", "sensitivity sweep");
  sweep->add_option("spec", spec)->required();
  sweep->add_option("--jobs", jobs)->check(CLI::PositiveNumber);

  std::string grid;
  auto* oracle = app.add_subcommand("oracle", "exhaustive search over a design grid");
  oracle->add_option("scenario", scn)->required();
  oracle->add_option("--grid", grid)->required();
  oracle->add_option("--out", out, "best design CSV (default stdout)");
  oracle->add_option("--jobs", jobs)->check(CLI::PositiveNumber);

  double miles = 0.0, minutes = 0.0;
  auto* fares = app.add_subcommand("fares", "AMoD fare for one trip");
  fares->add_option("--d", miles, "distance, miles")->required()->check(CLI::NonNegativeNumber);
  fares->add_option("--t", minutes, "duration, minutes")->required()->check(CLI::NonNegativeNumber);
  fares->add_option("--scenario", scn, "take the fare schedule from a scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(scn);
    if (*solve) return cmd_solve(solve_args);
    if (*evaluate) return cmd_evaluate(scn, design, out);
    if (*sweep) return cmd_sweep(spec, jobs);
    if (*oracle) return cmd_oracle(scn, grid, out, jobs);
    if (*fares) return cmd_fares(miles, minutes, scn);
  } catch (const ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kInvalid;
  } catch (const InvalidDesign& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  } catch (const lp::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
