// Bounded revised primal simplex on the computational form
//   A x - s = 0,  l <= (x, s) <= u
// with one logical s per row, a slack starting basis, composite phase 1,
// Dantzig pricing (Bland after a run of degenerate pivots) and a Harris
// two-pass ratio test. The basis is factorized with SparseLU and updated in
// product form between refactorizations.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "tcmum/lp/linear_program.hpp"

namespace tcmum::lp {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

enum class State : char { kBasic, kLower, kUpper, kBetween, kFixed };

class Simplex {
 public:
  Simplex(const LinearProgram& model, const SimplexOptions& options);
  Solution run();

 private:
  struct Eta {
    int p;
    double wp;
    std::vector<std::pair<int, double>> w;  // off-pivot entries
  };

  bool refactor();
  void slack_basis();
  void compute_basics();
  void ftran(Vec& v) const;
  void btran(Vec& v) const;
  void column(int j, Vec& out) const;
  double dot_column(int j, const Vec& y) const;
  double infeasibility(int j) const;
  bool any_infeasible() const;
  Solution finish(Status status);

  const LinearProgram& model_;
  SimplexOptions opt_;
  int m_ = 0;
  int n_ = 0;
  SpMat a_;
  std::vector<double> row_scale_;
  double cost_scale_ = 1.0;
  std::vector<double> lo_, hi_, cost_, x_;
  std::vector<State> state_;
  std::vector<int> head_;
  std::vector<int> pos_;

  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  long long iterations_ = 0;
  int degenerate_run_ = 0;
  int refactorizations_ = 0;
};

Simplex::Simplex(const LinearProgram& model, const SimplexOptions& options)
    : model_(model), opt_(options) {
  m_ = model.row_count();
  n_ = model.variable_count();

  row_scale_.assign(m_, 1.0);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < m_; ++i) {
    const auto& r = model.row(i);
    double big = 0.0;
    for (double v : r.value) big = std::max(big, std::abs(v));
    if (big > 0.0) row_scale_[i] = 1.0 / big;
    for (std::size_t k = 0; k < r.index.size(); ++k)
      triplets.emplace_back(i, r.index[k], r.value[k] * row_scale_[i]);
  }
  a_.resize(m_, n_);
  a_.setFromTriplets(triplets.begin(), triplets.end());
  a_.makeCompressed();

  const int total = n_ + m_;
  lo_.resize(total);
  hi_.resize(total);
  cost_.assign(total, 0.0);
  x_.assign(total, 0.0);
  state_.assign(total, State::kLower);

  double big_cost = 0.0;
  for (int j = 0; j < n_; ++j) big_cost = std::max(big_cost, std::abs(model.variable(j).cost));
  cost_scale_ = big_cost > 0.0 ? 1.0 / big_cost : 1.0;

  for (int j = 0; j < n_; ++j) {
    const auto& v = model.variable(j);
    lo_[j] = v.lower;
    hi_[j] = v.upper;
    cost_[j] = v.cost * cost_scale_;
  }
  for (int i = 0; i < m_; ++i) {
    const auto& r = model.row(i);
    const double rhs = r.rhs * row_scale_[i];
    lo_[n_ + i] = r.sense == Sense::kLessEqual ? -kInf : rhs;
    hi_[n_ + i] = r.sense == Sense::kGreaterEqual ? kInf : rhs;
  }

  for (int j = 0; j < n_; ++j) {
    const auto& v = model.variable(j);
    if (lo_[j] == hi_[j]) {
      state_[j] = State::kFixed;
      x_[j] = lo_[j];
    } else if (v.hint && *v.hint >= lo_[j] && *v.hint <= hi_[j]) {
      x_[j] = *v.hint;
      state_[j] = x_[j] == lo_[j]   ? State::kLower
                  : x_[j] == hi_[j] ? State::kUpper
                                    : State::kBetween;
    } else if (std::isfinite(lo_[j])) {
      x_[j] = lo_[j];
      state_[j] = State::kLower;
    } else if (std::isfinite(hi_[j])) {
      x_[j] = hi_[j];
      state_[j] = State::kUpper;
    } else {
      x_[j] = 0.0;
      state_[j] = State::kBetween;
    }
  }
  head_.resize(m_);
  pos_.assign(total, -1);
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    pos_[n_ + i] = i;
    state_[n_ + i] = State::kBasic;
  }
}

void Simplex::column(int j, Vec& out) const {
  out.setZero(m_);
  if (j >= n_) {
    out[j - n_] = -1.0;
    return;
  }
  for (SpMat::InnerIterator it(a_, j); it; ++it) out[it.row()] = it.value();
}

double Simplex::dot_column(int j, const Vec& y) const {
  if (j >= n_) return -y[j - n_];
  double s = 0.0;
  for (SpMat::InnerIterator it(a_, j); it; ++it) s += it.value() * y[it.row()];
  return s;
}

void Simplex::slack_basis() {
  for (int i = 0; i < m_; ++i) {
    const int j = head_[i];
    pos_[j] = -1;
    if (j < n_) {
      state_[j] = x_[j] <= lo_[j]   ? State::kLower
                  : x_[j] >= hi_[j] ? State::kUpper
                                    : State::kBetween;
      x_[j] = std::clamp(x_[j], lo_[j], hi_[j]);
    }
  }
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    pos_[n_ + i] = i;
    state_[n_ + i] = State::kBasic;
  }
}

bool Simplex::refactor() {
  etas_.clear();
  ++refactorizations_;
  if (m_ == 0) return true;
  std::vector<Eigen::Triplet<double>> triplets;
  for (int p = 0; p < m_; ++p) {
    const int j = head_[p];
    if (j >= n_) {
      triplets.emplace_back(j - n_, p, -1.0);
    } else {
      for (SpMat::InnerIterator it(a_, j); it; ++it)
        triplets.emplace_back(it.row(), p, it.value());
    }
  }
  SpMat basis(m_, m_);
  basis.setFromTriplets(triplets.begin(), triplets.end());
  basis.makeCompressed();
  lu_.analyzePattern(basis);
  lu_.factorize(basis);
  if (lu_.info() == Eigen::Success) return true;
  slack_basis();
  triplets.clear();
  for (int i = 0; i < m_; ++i) triplets.emplace_back(i, i, -1.0);
  basis.setZero();
  basis.setFromTriplets(triplets.begin(), triplets.end());
  lu_.analyzePattern(basis);
  lu_.factorize(basis);
  return false;
}

void Simplex::ftran(Vec& v) const {
  if (m_ == 0) return;
  v = lu_.solve(v);
  for (const auto& e : etas_) {
    const double vp = v[e.p] / e.wp;
    v[e.p] = vp;
    if (vp == 0.0) continue;
    for (const auto& [i, w] : e.w) v[i] -= w * vp;
  }
}

void Simplex::btran(Vec& v) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = v[it->p];
    for (const auto& [i, w] : it->w) s -= w * v[i];
    v[it->p] = s / it->wp;
  }
  v = lu_.transpose().solve(v);
}

void Simplex::compute_basics() {
  if (m_ == 0) return;
  Vec rhs = Vec::Zero(m_);
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == State::kBasic || x_[j] == 0.0) continue;
    if (j >= n_) {
      rhs[j - n_] += x_[j];
    } else {
      for (SpMat::InnerIterator it(a_, j); it; ++it)
        rhs[it.row()] -= it.value() * x_[j];
    }
  }
  ftran(rhs);
  for (int p = 0; p < m_; ++p) x_[head_[p]] = rhs[p];
}

double Simplex::infeasibility(int j) const {
  if (x_[j] < lo_[j] - opt_.feasibility_tol) return lo_[j] - x_[j];
  if (x_[j] > hi_[j] + opt_.feasibility_tol) return x_[j] - hi_[j];
  return 0.0;
}

bool Simplex::any_infeasible() const {
  for (int p = 0; p < m_; ++p)
    if (infeasibility(head_[p]) > 0.0) return true;
  return false;
}

Solution Simplex::finish(Status status) {
  Solution out;
  out.status = status;
  out.iterations = static_cast<int>(iterations_);
  out.x.assign(x_.begin(), x_.begin() + n_);
  if (status == Status::kOptimal) {
    // snap nonbasic values and tiny bound excursions onto the bounds
    for (int j = 0; j < n_; ++j) out.x[j] = std::clamp(out.x[j], lo_[j], hi_[j]);
  }
  out.activity.resize(m_);
  for (int i = 0; i < m_; ++i) out.activity[i] = model_.activity(i, out.x);
  out.objective = model_.objective(out.x);
  return out;
}

Solution Simplex::run() {
  const long long limit = opt_.iteration_limit > 0
                              ? opt_.iteration_limit
                              : 50LL * (m_ + n_) + 10000;
  refactor();
  compute_basics();
  bool fresh = true;

  Vec y(m_), w(m_), cb(m_);
  std::vector<double> alpha(m_);
  while (true) {
    if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
      refactor();
      compute_basics();
      fresh = true;
    }
    const bool phase1 = any_infeasible();
    for (int p = 0; p < m_; ++p) {
      const int j = head_[p];
      if (phase1) {
        cb[p] = x_[j] < lo_[j] - opt_.feasibility_tol   ? -1.0
                : x_[j] > hi_[j] + opt_.feasibility_tol ? 1.0
                                                        : 0.0;
      } else {
        cb[p] = cost_[j];
      }
    }
    y = cb;
    btran(y);

    // pricing
    const bool bland = degenerate_run_ >= opt_.bland_after;
    int q = -1;
    int dir = 0;
    double best = 0.0;
    for (int j = 0; j < n_ + m_; ++j) {
      const State s = state_[j];
      if (s == State::kBasic || s == State::kFixed) continue;
      const double d = (phase1 ? 0.0 : cost_[j]) - dot_column(j, y);
      int move = 0;
      if (d < -opt_.optimality_tol && (s == State::kLower || s == State::kBetween))
        move = 1;
      else if (d > opt_.optimality_tol && (s == State::kUpper || s == State::kBetween))
        move = -1;
      if (move == 0) continue;
      if (bland) {
        q = j;
        dir = move;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        q = j;
        dir = move;
      }
    }

    if (q < 0) {
      if (!fresh) {
        refactor();
        compute_basics();
        fresh = true;
        continue;
      }
      return finish(phase1 ? Status::kInfeasible : Status::kOptimal);
    }
    if (++iterations_ > limit) {
      std::ostringstream msg;
      msg << "simplex stalled after " << iterations_ - 1 << " iterations (" << m_
          << " rows, " << n_ << " columns, " << refactorizations_
          << " refactorizations, phase " << (phase1 ? 1 : 2) << ")";
      throw SolverError(msg.str());
    }

    column(q, w);
    ftran(w);
    for (int p = 0; p < m_; ++p) alpha[p] = -dir * w[p];

    // distance the entering variable may travel before its own bound
    const double q_range = dir > 0 ? hi_[q] - x_[q] : x_[q] - lo_[q];

    auto target = [&](int p, double& bound) {
      const int j = head_[p];
      const bool below = x_[j] < lo_[j] - opt_.feasibility_tol;
      const bool above = x_[j] > hi_[j] + opt_.feasibility_tol;
      // infeasible basics moving away from their bounds never block
      if (alpha[p] < 0.0) {
        if (below) return false;
        bound = above ? hi_[j] : lo_[j];
      } else {
        if (above) return false;
        bound = below ? lo_[j] : hi_[j];
      }
      return std::isfinite(bound);
    };

    int leave = -1;
    double leave_bound = 0.0;
    double step = kInf;
    if (bland) {
      for (int p = 0; p < m_; ++p) {
        if (std::abs(alpha[p]) <= opt_.pivot_tol) continue;
        double bound;
        if (!target(p, bound)) continue;
        const double ratio = std::max(0.0, (bound - x_[head_[p]]) / alpha[p]);
        if (ratio < step - 1e-12 ||
            (ratio <= step + 1e-12 && leave >= 0 && head_[p] < head_[leave])) {
          step = std::min(step, ratio);
          leave = p;
          leave_bound = bound;
        }
      }
    } else {
      double relaxed = kInf;
      for (int p = 0; p < m_; ++p) {
        if (std::abs(alpha[p]) <= opt_.pivot_tol) continue;
        double bound;
        if (!target(p, bound)) continue;
        const double slack = alpha[p] > 0.0 ? bound - x_[head_[p]] : x_[head_[p]] - bound;
        relaxed = std::min(relaxed, (slack + opt_.feasibility_tol) / std::abs(alpha[p]));
      }
      double biggest = 0.0;
      for (int p = 0; p < m_; ++p) {
        if (std::abs(alpha[p]) <= opt_.pivot_tol) continue;
        double bound;
        if (!target(p, bound)) continue;
        const double ratio = std::max(0.0, (bound - x_[head_[p]]) / alpha[p]);
        if (ratio <= relaxed && std::abs(alpha[p]) > biggest) {
          biggest = std::abs(alpha[p]);
          leave = p;
          leave_bound = bound;
          step = ratio;
        }
      }
    }

    if (q_range <= step) {
      // bound flip, basis unchanged
      if (!std::isfinite(q_range)) {
        if (phase1) {
          refactor();
          compute_basics();
          fresh = true;
          continue;
        }
        return finish(Status::kUnbounded);
      }
      for (int p = 0; p < m_; ++p) x_[head_[p]] += alpha[p] * q_range;
      x_[q] = dir > 0 ? hi_[q] : lo_[q];
      state_[q] = dir > 0 ? State::kUpper : State::kLower;
      degenerate_run_ = q_range > 1e-12 ? 0 : degenerate_run_ + 1;
      fresh = false;
      continue;
    }

    for (int p = 0; p < m_; ++p) x_[head_[p]] += alpha[p] * step;
    x_[q] += dir * step;
    degenerate_run_ = step > 1e-12 ? 0 : degenerate_run_ + 1;

    const int out = head_[leave];
    const double bound = leave_bound;
    x_[out] = bound;
    state_[out] = lo_[out] == hi_[out] ? State::kFixed
                  : bound == lo_[out]  ? State::kLower
                                       : State::kUpper;
    pos_[out] = -1;
    head_[leave] = q;
    pos_[q] = leave;
    state_[q] = State::kBasic;

    Eta eta{leave, w[leave], {}};
    for (int p = 0; p < m_; ++p)
      if (p != leave && w[p] != 0.0) eta.w.emplace_back(p, w[p]);
    etas_.push_back(std::move(eta));
    fresh = false;
  }
}

}  // namespace

Solution SimplexBackend::solve(const LinearProgram& model) const {
  model.check();
  return Simplex(model, options_).run();
}

}  // namespace tcmum::lp
