#include "tcmum/lp/linear_program.hpp"

#include <algorithm>
#include <cmath>

namespace tcmum::lp {

int LinearProgram::add_variable(std::string name, double lower, double upper,
                                double cost) {
  variables_.push_back({std::move(name), lower, upper, cost, std::nullopt});
  return variable_count() - 1;
}

int LinearProgram::add_row(std::vector<std::pair<int, double>> terms, Sense sense,
                           double rhs, std::string name) {
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Row row;
  row.name = std::move(name);
  row.sense = sense;
  row.rhs = rhs;
  for (const auto& [j, v] : terms) {
    if (!row.index.empty() && row.index.back() == j) {
      row.value.back() += v;
    } else {
      row.index.push_back(j);
      row.value.push_back(v);
    }
  }
  // drop cancelled entries
  std::size_t k = 0;
  for (std::size_t i = 0; i < row.index.size(); ++i) {
    if (row.value[i] == 0.0) continue;
    row.index[k] = row.index[i];
    row.value[k] = row.value[i];
    ++k;
  }
  row.index.resize(k);
  row.value.resize(k);
  rows_.push_back(std::move(row));
  return row_count() - 1;
}

void LinearProgram::set_bounds(int var, double lower, double upper) {
  variables_[var].lower = lower;
  variables_[var].upper = upper;
}

double LinearProgram::activity(int row, const std::vector<double>& x) const {
  const auto& r = rows_[row];
  double s = 0.0;
  for (std::size_t k = 0; k < r.index.size(); ++k) s += r.value[k] * x[r.index[k]];
  return s;
}

double LinearProgram::objective(const std::vector<double>& x) const {
  double s = offset_;
  for (int j = 0; j < variable_count(); ++j) s += variables_[j].cost * x[j];
  return s;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int j = 0; j < variable_count(); ++j) {
    worst = std::max(worst, variables_[j].lower - x[j]);
    worst = std::max(worst, x[j] - variables_[j].upper);
  }
  for (int i = 0; i < row_count(); ++i) {
    const double a = activity(i, x);
    const auto& r = rows_[i];
    if (r.sense != Sense::kGreaterEqual) worst = std::max(worst, a - r.rhs);
    if (r.sense != Sense::kLessEqual) worst = std::max(worst, r.rhs - a);
  }
  return worst;
}

void LinearProgram::check() const {
  for (int j = 0; j < variable_count(); ++j) {
    const auto& v = variables_[j];
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper ||
        v.lower == kInf || v.upper == -kInf)
      throw Error("variable '" + v.name + "' has invalid bounds");
    if (!std::isfinite(v.cost)) throw Error("variable '" + v.name + "' has non-finite cost");
  }
  for (int i = 0; i < row_count(); ++i) {
    const auto& r = rows_[i];
    if (!std::isfinite(r.rhs)) throw Error("row '" + r.name + "' has non-finite rhs");
    for (std::size_t k = 0; k < r.index.size(); ++k) {
      if (r.index[k] < 0 || r.index[k] >= variable_count())
        throw Error("row '" + r.name + "' references an unknown variable");
      if (!std::isfinite(r.value[k]))
        throw Error("row '" + r.name + "' has a non-finite coefficient");
    }
  }
  if (!std::isfinite(offset_)) throw Error("objective offset is not finite");
}

std::string to_string(Status status) {
  switch (status) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
  }
  return "?";
}

Solution solve_lp(const LinearProgram& model) { return SimplexBackend().solve(model); }

}  // namespace tcmum::lp
