#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tcmum/model.hpp"

namespace tcmum::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { kLessEqual, kGreaterEqual, kEqual };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  double cost = 0.0;
  std::optional<double> hint;  // preferred starting value while nonbasic
};

struct Row {
  std::string name;
  std::vector<int> index;  // sorted, unique
  std::vector<double> value;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

// Minimization model: min c'x + offset  s.t. rows, lower <= x <= upper.
class LinearProgram {
 public:
  int add_variable(std::string name, double lower, double upper, double cost = 0.0);
  // Duplicate indices are summed, zeros dropped, and the row sorted.
  int add_row(std::vector<std::pair<int, double>> terms, Sense sense, double rhs,
              std::string name = {});

  void set_cost(int var, double cost) { variables_[var].cost = cost; }
  void add_cost(int var, double cost) { variables_[var].cost += cost; }
  void set_bounds(int var, double lower, double upper);
  void set_hint(int var, double value) { variables_[var].hint = value; }
  void set_offset(double offset) { offset_ = offset; }
  void add_offset(double offset) { offset_ += offset; }

  int variable_count() const { return static_cast<int>(variables_.size()); }
  int row_count() const { return static_cast<int>(rows_.size()); }
  const Variable& variable(int j) const { return variables_[j]; }
  const Row& row(int i) const { return rows_[i]; }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Row>& rows() const { return rows_; }
  double offset() const { return offset_; }

  double objective(const std::vector<double>& x) const;
  double activity(int row, const std::vector<double>& x) const;
  // Largest bound or row violation of x.
  double max_violation(const std::vector<double>& x) const;

  // Throws Error on non-finite coefficients, bad indices or crossed bounds.
  void check() const;

 private:
  std::vector<Variable> variables_;
  std::vector<Row> rows_;
  double offset_ = 0.0;
};

enum class Status { kOptimal, kInfeasible, kUnbounded };
std::string to_string(Status status);

struct Solution {
  Status status = Status::kInfeasible;
  double objective = 0.0;
  std::vector<double> x;
  std::vector<double> activity;
  int iterations = 0;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class LpBackend {
 public:
  virtual ~LpBackend() = default;
  virtual Solution solve(const LinearProgram& model) const = 0;
  virtual std::string name() const = 0;
};

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 100;
  int bland_after = 50;        // consecutive degenerate pivots
  long long iteration_limit = 0;  // 0: automatic
};

// Bounded revised primal simplex with row equilibration.
class SimplexBackend : public LpBackend {
 public:
  explicit SimplexBackend(SimplexOptions options = {}) : options_(options) {}
  Solution solve(const LinearProgram& model) const override;
  std::string name() const override { return "simplex"; }

 private:
  SimplexOptions options_;
};

// Solves with the built-in simplex backend.
Solution solve_lp(const LinearProgram& model);

}  // namespace tcmum::lp
