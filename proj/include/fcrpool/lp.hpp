#pragma once

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace fcrpool::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense { kLessEqual, kEqual };

struct Row {
  std::vector<std::pair<std::size_t, double>> terms;
  RowSense sense = RowSense::kLessEqual;
  double rhs = 0.0;
};

/// min cost'x  s.t.  rows,  lower <= x <= upper. Lower bounds must be finite.
struct LinearProgram {
  std::vector<double> cost;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Row> rows;

  std::size_t num_vars() const { return cost.size(); }
  std::size_t add_var(double c, double lo, double hi);
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;
  std::vector<double> x;
  std::size_t pivots = 0;
};

/// Dense bounded-variable primal simplex (two phases, Dantzig pricing with a
/// Bland fallback on degenerate stalls).
LpResult solve_lp(const LinearProgram& program);

// ---------------------------------------------------------------------------
// 0-1 branch and bound over an LP whose listed variables must be binary.

struct BranchAndBoundOptions {
  double gap_tol = 1e-9;          // relative
  double abs_tol = 1e-9;          // absolute slack on pruning
  std::size_t node_limit = 200000;
  bool integral_objective = false;  // objective takes integer values only
};

enum class BnbStatus { kOptimal, kInfeasible, kBudgetExceeded };

struct BranchAndBoundResult {
  BnbStatus status = BnbStatus::kInfeasible;
  double objective = kInfinity;  // incumbent value (inf if none)
  double bound = -kInfinity;     // proven lower bound
  double root_bound = -kInfinity;
  std::vector<double> x;         // incumbent
  std::size_t nodes = 0;
  bool has_incumbent() const { return !x.empty(); }
};

/// Best-bound branch and bound: most-fractional branching among `binary`
/// variables (ties to the lowest index). Among equal bounds the newest node
/// is explored first, and the 1-branch is pushed after the 0-branch.
/// Each node's relaxation is checked to be no better than its parent's.
BranchAndBoundResult solve_binary(const LinearProgram& program,
                                  const std::vector<std::size_t>& binary,
                                  const BranchAndBoundOptions& options = {});

}  // namespace fcrpool::lp
