#include "fcrpool/lp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "fcrpool/error.hpp"

namespace fcrpool::lp {

std::size_t LinearProgram::add_var(double c, double lo, double hi) {
  cost.push_back(c);
  lower.push_back(lo);
  upper.push_back(hi);
  return cost.size() - 1;
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr std::size_t kDegenerateStreak = 50;
constexpr std::size_t kReinvertEvery = 100;
constexpr double kStallGain = 1e-9;  // objective decrease treated as no progress

class Tableau {
 public:
  explicit Tableau(const LinearProgram& lp) : n_(lp.num_vars()), m_(lp.rows.size()) {
    if (lp.lower.size() != n_ || lp.upper.size() != n_) {
      throw Error(ErrorKind::kShapeMismatch, "bounds do not match variable count");
    }
    // Columns: structural [0,n), row auxiliaries [n, n+m), artificials after.
    lower_ = lp.lower;
    upper_ = lp.upper;
    for (std::size_t j = 0; j < n_; ++j) {
      if (!std::isfinite(lower_[j])) {
        throw Error(ErrorKind::kInvalidArgument, "lower bounds must be finite");
      }
    }
    for (const Row& row : lp.rows) {
      lower_.push_back(0.0);
      upper_.push_back(row.sense == RowSense::kEqual ? 0.0 : kInfinity);
    }
    x_.assign(n_ + m_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) x_[j] = lower_[j];

    std::vector<double> residual(m_);
    std::vector<int> art_sign(m_, 0);
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      double act = 0.0;
      for (auto [j, a] : lp.rows[i].terms) act += a * x_[j];
      residual[i] = lp.rows[i].rhs - act;
      const double aux_hi = upper_[n_ + i];
      if (residual[i] >= -kFeasTol && residual[i] <= aux_hi + kFeasTol) continue;
      art_sign[i] = residual[i] > 0.0 ? 1 : -1;
      ++n_art;
    }
    cols_ = n_ + m_ + n_art;
    first_art_ = n_ + m_;
    lower_.resize(cols_, 0.0);
    upper_.resize(cols_, kInfinity);
    x_.resize(cols_, 0.0);
    at_upper_.assign(cols_, false);
    basic_row_.assign(cols_, kNotBasic);

    t_.assign(m_ * cols_, 0.0);
    beta_.assign(m_, 0.0);
    basis_.assign(m_, 0);
    std::size_t art = first_art_;
    for (std::size_t i = 0; i < m_; ++i) {
      const double sign = art_sign[i] == 0 ? 1.0 : static_cast<double>(art_sign[i]);
      double* row = &t_[i * cols_];
      for (auto [j, a] : lp.rows[i].terms) row[j] += sign * a;
      row[n_ + i] = sign;
      beta_[i] = sign * lp.rows[i].rhs;
      if (art_sign[i] == 0) {
        set_basic(i, n_ + i);
      } else {
        row[art] = 1.0;
        set_basic(i, art);
        ++art;
      }
    }
    a0_ = t_;
    b0_ = beta_;
    refresh_basic_values();
  }

  std::size_t num_art() const { return cols_ - first_art_; }

  LpStatus run_phase(const std::vector<double>& cost, std::size_t& pivots,
                     std::size_t iteration_limit) {
    compute_reduced_costs(cost);
    std::size_t since_reinvert = 0;
    std::size_t streak = 0;
    bool bland = false;
    for (std::size_t iter = 0; iter < iteration_limit; ++iter) {
      // Pricing.
      std::size_t enter = kNotBasic;
      int dir = 0;
      double best = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (basic_row_[j] != kNotBasic || !(upper_[j] > lower_[j])) continue;
        const double d = d_[j];
        int jdir = 0;
        if (!at_upper_[j] && d < -kCostTol) jdir = 1;
        if (at_upper_[j] && d > kCostTol) jdir = -1;
        if (jdir == 0) continue;
        if (bland) {
          enter = j;
          dir = jdir;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          enter = j;
          dir = jdir;
        }
      }
      if (enter == kNotBasic) return LpStatus::kOptimal;

      // Ratio test.
      double theta = upper_[enter] - lower_[enter];
      std::size_t leave_row = kNotBasic;
      bool leave_to_upper = false;
      double leave_pivot = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double g = dir * t_[i * cols_ + enter];
        const std::size_t b = basis_[i];
        double limit;
        bool to_upper;
        if (g > kPivotTol) {
          limit = std::max(0.0, x_[b] - lower_[b]) / g;
          to_upper = false;
        } else if (g < -kPivotTol && std::isfinite(upper_[b])) {
          limit = std::max(0.0, upper_[b] - x_[b]) / -g;
          to_upper = true;
        } else {
          continue;
        }
        const bool better =
            limit < theta - 1e-12 ||
            (limit <= theta + 1e-12 && leave_row != kNotBasic &&
             (bland ? b < basis_[leave_row] : std::abs(g) > leave_pivot));
        if (better || (leave_row == kNotBasic && limit <= theta)) {
          theta = limit;
          leave_row = i;
          leave_to_upper = to_upper;
          leave_pivot = std::abs(g);
        }
      }
      if (!std::isfinite(theta)) return LpStatus::kUnbounded;

      // Move.
      const double d_enter = d_[enter];
      const double step = dir * theta;
      x_[enter] += step;
      for (std::size_t i = 0; i < m_; ++i) {
        x_[basis_[i]] -= step * t_[i * cols_ + enter];
      }
      if (leave_row == kNotBasic) {
        at_upper_[enter] = dir > 0;
        x_[enter] = dir > 0 ? upper_[enter] : lower_[enter];
      } else {
        const std::size_t out = basis_[leave_row];
        pivot(leave_row, enter);
        x_[out] = leave_to_upper ? upper_[out] : lower_[out];
        at_upper_[out] = leave_to_upper;
        ++pivots;
        if (++since_reinvert >= kReinvertEvery) {
          reinvert(cost);
          since_reinvert = 0;
        }
      }

      // Bland's rule stays on until the objective has really moved; steps of
      // rounding size would otherwise re-enter the cycle it broke.
      const double gain = theta * std::abs(d_enter);
      if (gain <= kStallGain) {
        if (++streak > kDegenerateStreak) bland = true;
      } else {
        streak = 0;
        bland = false;
      }
      if (pivots % 64 == 0) refresh_basic_values();
    }
    return LpStatus::kIterationLimit;
  }

  double artificial_sum() const {
    double s = 0.0;
    for (std::size_t j = first_art_; j < cols_; ++j) s += x_[j];
    return s;
  }

  /// Pins artificials to zero and pivots basic ones out where possible.
  void retire_artificials() {
    for (std::size_t j = first_art_; j < cols_; ++j) {
      upper_[j] = 0.0;
      x_[j] = 0.0;
      at_upper_[j] = false;
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < first_art_) continue;
      for (std::size_t j = 0; j < first_art_; ++j) {
        if (basic_row_[j] == kNotBasic && std::abs(t_[i * cols_ + j]) > 1e-7) {
          const std::size_t out = basis_[i];
          pivot(i, j);
          x_[out] = 0.0;
          break;
        }
      }
    }
    refresh_basic_values();
  }

  void finish() { refresh_basic_values(); }

  /// Rebuilds the tableau, the reduced costs and the basic values from the
  /// original system for the current basis, discarding accumulated rounding.
  void reinvert(const std::vector<double>& cost) {
    t_ = a0_;
    beta_ = b0_;
    const std::vector<std::size_t> cols = basis_;
    std::vector<bool> row_done(m_, false);
    for (std::size_t c : cols) basic_row_[c] = kNotBasic;
    for (std::size_t c : cols) {
      std::size_t r = kNotBasic;
      double best = 1e-9;
      for (std::size_t i = 0; i < m_; ++i) {
        if (!row_done[i] && std::abs(t_[i * cols_ + c]) > best) {
          best = std::abs(t_[i * cols_ + c]);
          r = i;
        }
      }
      if (r == kNotBasic) continue;  // dependent column; a slack takes its place below
      eliminate(r, c);
      row_done[r] = true;
      set_basic(r, c);
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (row_done[i]) continue;
      // The row's own auxiliary column is a unit vector in the original system.
      eliminate(i, n_ + i);
      set_basic(i, n_ + i);
    }
    for (std::size_t c : cols) {
      if (basic_row_[c] == kNotBasic) {
        at_upper_[c] = false;
        x_[c] = lower_[c];
      }
    }
    compute_reduced_costs(cost);
    refresh_basic_values();
  }

  const std::vector<double>& values() const { return x_; }
  std::size_t cols() const { return cols_; }

 private:
  static constexpr std::size_t kNotBasic = static_cast<std::size_t>(-1);

  void set_basic(std::size_t row, std::size_t col) {
    basis_[row] = col;
    basic_row_[col] = row;
  }

  void compute_reduced_costs(const std::vector<double>& cost) {
    d_ = cost;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &t_[i * cols_];
      for (std::size_t j = 0; j < cols_; ++j) d_[j] -= cb * row[j];
    }
  }

  // Gauss-Jordan step on the tableau and right-hand side only.
  void eliminate(std::size_t r, std::size_t q) {
    double* prow = &t_[r * cols_];
    const double piv = prow[q];
    for (std::size_t j = 0; j < cols_; ++j) prow[j] /= piv;
    beta_[r] /= piv;
    prow[q] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &t_[i * cols_];
      const double f = row[q];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) row[j] -= f * prow[j];
      row[q] = 0.0;
      beta_[i] -= f * beta_[r];
    }
  }

  void pivot(std::size_t r, std::size_t q) {
    double* prow = &t_[r * cols_];
    const double piv = prow[q];
    for (std::size_t j = 0; j < cols_; ++j) prow[j] /= piv;
    beta_[r] /= piv;
    prow[q] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &t_[i * cols_];
      const double f = row[q];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) row[j] -= f * prow[j];
      row[q] = 0.0;
      beta_[i] -= f * beta_[r];
    }
    const double fd = d_[q];
    if (fd != 0.0) {
      for (std::size_t j = 0; j < cols_; ++j) d_[j] -= fd * prow[j];
      d_[q] = 0.0;
    }
    basic_row_[basis_[r]] = kNotBasic;
    set_basic(r, q);
  }

  void refresh_basic_values() {
    for (std::size_t i = 0; i < m_; ++i) {
      const double* row = &t_[i * cols_];
      double v = beta_[i];
      for (std::size_t j = 0; j < cols_; ++j) {
        if (basic_row_[j] == kNotBasic && x_[j] != 0.0) v -= row[j] * x_[j];
      }
      x_[basis_[i]] = v;
    }
  }

  std::size_t n_;
  std::size_t m_;
  std::size_t cols_ = 0;
  std::size_t first_art_ = 0;
  std::vector<double> t_;
  std::vector<double> beta_;
  std::vector<double> a0_, b0_;  // original system after row sign flips
  std::vector<double> d_;
  std::vector<double> lower_, upper_, x_;
  std::vector<bool> at_upper_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> basic_row_;
};

}  // namespace

LpResult solve_lp(const LinearProgram& program) {
  const std::size_t n = program.num_vars();
  for (std::size_t j = 0; j < n; ++j) {
    if (program.lower[j] > program.upper[j] + kFeasTol) return {LpStatus::kInfeasible, 0.0, {}, 0};
  }
  Tableau tab(program);
  LpResult result;
  const std::size_t limit = 50000 + 50 * (tab.cols() + program.rows.size());

  if (tab.num_art() > 0) {
    std::vector<double> phase1(tab.cols(), 0.0);
    for (std::size_t j = tab.cols() - tab.num_art(); j < tab.cols(); ++j) phase1[j] = 1.0;
    const LpStatus st = tab.run_phase(phase1, result.pivots, limit);
    if (st == LpStatus::kIterationLimit) {
      result.status = st;
      return result;
    }
    if (tab.artificial_sum() > kFeasTol) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    tab.retire_artificials();
  }

  std::vector<double> phase2(tab.cols(), 0.0);
  std::copy(program.cost.begin(), program.cost.end(), phase2.begin());
  result.status = tab.run_phase(phase2, result.pivots, limit);
  tab.finish();
  const auto& x = tab.values();
  result.x.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
  result.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) result.objective += program.cost[j] * result.x[j];
  return result;
}

// ---------------------------------------------------------------------------
// Branch and bound

namespace {

struct Node {
  double bound;
  std::size_t seq;
  std::vector<std::pair<std::size_t, bool>> fixings;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.seq < b.seq;
  }
};

constexpr double kIntTol = 1e-7;

}  // namespace

BranchAndBoundResult solve_binary(const LinearProgram& program,
                                  const std::vector<std::size_t>& binary,
                                  const BranchAndBoundOptions& options) {
  BranchAndBoundResult out;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::size_t seq = 0;
  open.push({-kInfinity, seq++, {}});

  auto prune_level = [&]() {
    if (!out.has_incumbent()) return kInfinity;
    if (options.integral_objective) return out.objective - 1.0 + 1e-6;
    return out.objective - std::max(options.abs_tol, options.gap_tol * std::abs(out.objective));
  };

  LinearProgram work = program;
  while (!open.empty()) {
    if (open.top().bound >= prune_level()) break;
    if (out.nodes >= options.node_limit) {
      out.status = BnbStatus::kBudgetExceeded;
      out.bound = std::min(open.top().bound, out.objective);
      return out;
    }
    Node node = open.top();
    open.pop();
    ++out.nodes;

    work.lower = program.lower;
    work.upper = program.upper;
    for (auto [j, one] : node.fixings) {
      work.lower[j] = one ? 1.0 : 0.0;
      work.upper[j] = one ? 1.0 : 0.0;
    }
    const LpResult lp = solve_lp(work);
    if (lp.status == LpStatus::kInfeasible) continue;
    if (lp.status != LpStatus::kOptimal) {
      throw Error(ErrorKind::kInfeasible, "node relaxation did not solve to optimality");
    }
    // A child's relaxation can never beat its parent's.
    if (lp.objective < node.bound - 1e-6 * (1.0 + std::abs(node.bound))) {
      throw std::logic_error("branch-and-bound relaxation improved on its parent");
    }
    const double bound = std::max(lp.objective, node.bound);
    if (node.fixings.empty()) out.root_bound = bound;
    if (bound >= prune_level()) continue;

    std::size_t branch = static_cast<std::size_t>(-1);
    double closest = 1.0;
    for (std::size_t j : binary) {
      const double v = lp.x[j];
      const double frac = std::abs(v - std::round(v));
      if (frac <= kIntTol) continue;
      const double dist = std::abs(v - 0.5);
      if (dist < closest || (dist == closest && j < branch)) {
        closest = dist;
        branch = j;
      }
    }
    if (branch == static_cast<std::size_t>(-1)) {
      std::vector<double> x = lp.x;
      for (std::size_t j : binary) x[j] = std::round(x[j]);
      if (!out.has_incumbent() || lp.objective < out.objective - options.abs_tol) {
        out.objective = lp.objective;
        out.x = std::move(x);
      }
      continue;
    }
    for (bool one : {false, true}) {
      Node child{bound, seq++, node.fixings};
      child.fixings.emplace_back(branch, one);
      open.push(std::move(child));
    }
  }

  if (!out.has_incumbent()) {
    out.status = BnbStatus::kInfeasible;
    return out;
  }
  out.status = BnbStatus::kOptimal;
  out.bound = open.empty() ? out.objective : std::min(open.top().bound, out.objective);
  return out;
}

}  // namespace fcrpool::lp
