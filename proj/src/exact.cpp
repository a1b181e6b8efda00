// Exact solver for the pooling problem.
//
// For a fixed activation pattern the objective is piecewise linear and convex
// in p_F with breakpoints at multiples of the power cap, so an optimum always
// has p_F = cap * K with exactly K assets at full power in every step. The
// problem therefore separates into, per step t and count K, a 0-1 selection
// of K assets of least cost under the circle caps. Only circles with more
// members than the cap can bind; assets outside them are chosen greedily and
// connected groups of binding circles are solved by branch and bound.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fcrpool/lp.hpp"
#include "fcrpool/model.hpp"

namespace fcrpool {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Component {
  std::vector<std::size_t> assets;                 // scenario rows, ascending
  std::vector<std::vector<std::size_t>> circles;   // local indices into assets
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

struct Decomposition {
  std::vector<std::size_t> free_assets;
  std::vector<Component> components;
};

Decomposition decompose(const Scenario& s) {
  const auto cap = static_cast<std::size_t>(s.circle_cap());
  std::vector<std::size_t> binding;
  for (std::size_t c = 0; c < s.num_circles(); ++c) {
    if (s.circle_rows(c).size() > cap) binding.push_back(c);
  }
  UnionFind uf(s.num_assets());
  std::vector<bool> constrained(s.num_assets(), false);
  for (std::size_t c : binding) {
    const auto& rows = s.circle_rows(c);
    for (std::size_t i : rows) {
      constrained[i] = true;
      uf.unite(rows.front(), i);
    }
  }
  Decomposition d;
  std::vector<std::size_t> comp_of_root(s.num_assets(), static_cast<std::size_t>(-1));
  std::vector<std::size_t> local_index(s.num_assets(), 0);
  for (std::size_t i = 0; i < s.num_assets(); ++i) {
    if (!constrained[i]) {
      d.free_assets.push_back(i);
      continue;
    }
    const std::size_t root = uf.find(i);
    if (comp_of_root[root] == static_cast<std::size_t>(-1)) {
      comp_of_root[root] = d.components.size();
      d.components.emplace_back();
    }
    Component& comp = d.components[comp_of_root[root]];
    local_index[i] = comp.assets.size();
    comp.assets.push_back(i);
  }
  for (std::size_t c : binding) {
    const auto& rows = s.circle_rows(c);
    Component& comp = d.components[comp_of_root[uf.find(rows.front())]];
    std::vector<std::size_t> local;
    for (std::size_t i : rows) local.push_back(local_index[i]);
    comp.circles.push_back(std::move(local));
  }
  return d;
}

lp::LinearProgram selection_program(const Component& comp, int circle_cap) {
  lp::LinearProgram prog;
  for (std::size_t j = 0; j < comp.assets.size(); ++j) prog.add_var(0.0, 0.0, 1.0);
  for (const auto& circle : comp.circles) {
    lp::Row row;
    row.sense = lp::RowSense::kLessEqual;
    row.rhs = circle_cap;
    for (std::size_t j : circle) row.terms.emplace_back(j, 1.0);
    prog.rows.push_back(std::move(row));
  }
  return prog;
}

std::vector<std::size_t> chosen_of(const std::vector<double>& x) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] > 0.5) out.push_back(j);
  }
  return out;
}

// Least-cost selection of exactly k members, for k = 0..max_k.
struct SelectionTable {
  std::vector<double> value;                     // inf when no selection known
  std::vector<double> bound;
  std::vector<std::vector<std::size_t>> chosen;  // local indices
};

class Budget {
 public:
  explicit Budget(std::size_t limit) : left_(limit) {}
  std::size_t grant() const { return left_ > 0 ? left_ : 1; }
  void spend(std::size_t nodes) {
    used_ += nodes;
    left_ = nodes >= left_ ? 0 : left_ - nodes;
  }
  bool exhausted() const { return left_ == 0; }
  std::size_t used() const { return used_; }

 private:
  std::size_t left_;
  std::size_t used_ = 0;
};

struct Packing {
  std::size_t max_primal = 0;            // best known selection size
  std::size_t max_bound = 0;             // proven upper bound on the size
  std::vector<std::size_t> chosen;       // a selection of max_primal members
};

Packing max_packing(const Component& comp, int circle_cap, double gap_tol, Budget& budget,
                    bool& exact) {
  lp::LinearProgram prog = selection_program(comp, circle_cap);
  std::fill(prog.cost.begin(), prog.cost.end(), -1.0);
  std::vector<std::size_t> binary(comp.assets.size());
  std::iota(binary.begin(), binary.end(), 0);
  lp::BranchAndBoundOptions opt;
  opt.gap_tol = gap_tol;
  opt.node_limit = budget.grant();
  opt.integral_objective = true;
  const auto res = lp::solve_binary(prog, binary, opt);
  budget.spend(res.nodes);
  Packing pk;
  if (res.has_incumbent()) {
    pk.chosen = chosen_of(res.x);
    pk.max_primal = pk.chosen.size();
  }
  if (res.status == lp::BnbStatus::kOptimal) {
    pk.max_bound = pk.max_primal;
  } else {
    exact = false;
    pk.max_bound = static_cast<std::size_t>(std::floor(-res.bound + 1e-6));
  }
  return pk;
}

SelectionTable selection_table(const Component& comp, const Packing& pk,
                               std::span<const double> step_cost, int circle_cap,
                               double gap_tol, Budget& budget, bool& exact,
                               std::size_t& subproblems) {
  const std::size_t kmax = pk.max_bound;
  SelectionTable tab{std::vector<double>(kmax + 1, kInf), std::vector<double>(kmax + 1, kInf),
                     std::vector<std::vector<std::size_t>>(kmax + 1)};
  tab.value[0] = 0.0;
  tab.bound[0] = 0.0;

  const double first = step_cost[comp.assets.front()];
  const bool uniform = std::all_of(comp.assets.begin(), comp.assets.end(),
                                   [&](std::size_t i) { return step_cost[i] == first; });
  if (uniform) {
    // Every feasible k-selection costs the same; any k members of the
    // packing will do.
    for (std::size_t k = 1; k <= kmax; ++k) {
      tab.bound[k] = first * static_cast<double>(k);
      if (k <= pk.max_primal) {
        tab.value[k] = tab.bound[k];
        tab.chosen[k].assign(pk.chosen.begin(), pk.chosen.begin() + static_cast<std::ptrdiff_t>(k));
      }
    }
    return tab;
  }

  lp::LinearProgram prog = selection_program(comp, circle_cap);
  for (std::size_t j = 0; j < comp.assets.size(); ++j) prog.cost[j] = step_cost[comp.assets[j]];
  lp::Row count;
  count.sense = lp::RowSense::kEqual;
  for (std::size_t j = 0; j < comp.assets.size(); ++j) count.terms.emplace_back(j, 1.0);
  prog.rows.push_back(std::move(count));
  std::vector<std::size_t> binary(comp.assets.size());
  std::iota(binary.begin(), binary.end(), 0);

  for (std::size_t k = 1; k <= kmax; ++k) {
    prog.rows.back().rhs = static_cast<double>(k);
    lp::BranchAndBoundOptions opt;
    opt.gap_tol = gap_tol;
    opt.node_limit = budget.grant();
    const auto res = lp::solve_binary(prog, binary, opt);
    budget.spend(res.nodes);
    ++subproblems;
    if (res.status == lp::BnbStatus::kInfeasible) continue;
    if (res.status != lp::BnbStatus::kOptimal) exact = false;
    tab.bound[k] = res.bound;
    if (res.has_incumbent()) {
      tab.chosen[k] = chosen_of(res.x);
      tab.value[k] = 0.0;
      for (std::size_t j : tab.chosen[k]) tab.value[k] += step_cost[comp.assets[j]];
    }
  }
  return tab;
}

// Min-plus combination over the free assets and every component for one
// step. value[K] is the least cost of K active assets; `pick` records how
// many each component contributed.
struct StepPlan {
  std::vector<double> value;
  std::vector<double> bound;
  std::vector<std::vector<std::size_t>> pick;  // [K][component]
};

StepPlan combine(std::size_t n_free, std::span<const double> free_sorted,
                 const std::vector<SelectionTable>& tables) {
  std::size_t kmax = n_free;
  for (const auto& t : tables) kmax += t.value.size() - 1;
  StepPlan plan{std::vector<double>(kmax + 1, kInf), std::vector<double>(kmax + 1, kInf),
                std::vector<std::vector<std::size_t>>(kmax + 1)};
  // Start with the free assets: cheapest first.
  double prefix = 0.0;
  for (std::size_t k = 0; k <= n_free; ++k) {
    if (k > 0) prefix += free_sorted[k - 1];
    plan.value[k] = prefix;
    plan.bound[k] = prefix;
  }
  std::size_t reach = n_free;
  for (std::size_t c = 0; c < tables.size(); ++c) {
    const auto& tab = tables[c];
    const std::size_t cmax = tab.value.size() - 1;
    std::vector<double> value(kmax + 1, kInf), bound(kmax + 1, kInf);
    std::vector<std::vector<std::size_t>> pick(kmax + 1);
    for (std::size_t k = 0; k <= reach + cmax; ++k) {
      std::size_t best_j = 0;
      for (std::size_t j = 0; j <= std::min(k, cmax); ++j) {
        if (k - j > reach) continue;
        const double v = plan.value[k - j] + tab.value[j];
        if (v < value[k]) {
          value[k] = v;
          best_j = j;
        }
        bound[k] = std::min(bound[k], plan.bound[k - j] + tab.bound[j]);
      }
      if (value[k] < kInf) {
        pick[k] = plan.pick[k - best_j];
        pick[k].push_back(best_j);
      }
    }
    plan.value = std::move(value);
    plan.bound = std::move(bound);
    plan.pick = std::move(pick);
    reach += cmax;
  }
  return plan;
}

}  // namespace

ExactResult solve_exact(const Scenario& s, const ExactOptions& options) {
  const Decomposition dec = decompose(s);
  const std::size_t T = s.horizon();
  const double cap = s.power_cap();
  Budget budget(options.node_limit);
  bool exact = true;
  ExactResult result;

  std::vector<Packing> packings;
  for (const auto& comp : dec.components) {
    packings.push_back(max_packing(comp, s.circle_cap(), options.gap_tol, budget, exact));
  }

  std::vector<StepPlan> plans;
  std::vector<std::vector<SelectionTable>> tables(T);
  std::vector<std::vector<std::size_t>> free_order(T);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> step_cost(s.num_assets());
    for (std::size_t i = 0; i < s.num_assets(); ++i) step_cost[i] = s.cost()(i, t);
    for (std::size_t c = 0; c < dec.components.size(); ++c) {
      tables[t].push_back(selection_table(dec.components[c], packings[c], step_cost,
                                          s.circle_cap(), options.gap_tol, budget, exact,
                                          result.subproblems));
    }
    free_order[t] = dec.free_assets;
    std::stable_sort(free_order[t].begin(), free_order[t].end(),
                     [&](std::size_t a, std::size_t b) { return step_cost[a] < step_cost[b]; });
    std::vector<double> sorted;
    for (std::size_t i : free_order[t]) sorted.push_back(step_cost[i]);
    plans.push_back(combine(dec.free_assets.size(), sorted, tables[t]));
  }

  // Pick the count K with the best total over all steps.
  const std::size_t kmax = plans.front().value.size() - 1;
  const double revenue_per_k = s.fcr_price() * static_cast<double>(T) * cap;
  std::size_t best_k = 0;
  double best = 0.0;
  double lower = 0.0;
  for (std::size_t k = 0; k <= kmax; ++k) {
    double v = 0.0, b = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      v += plans[t].value[k];
      b += plans[t].bound[k];
    }
    const double obj = cap * v - revenue_per_k * static_cast<double>(k);
    const double lb = cap * b - revenue_per_k * static_cast<double>(k);
    lower = std::min(lower, lb);
    if (obj < best) {
      best = obj;
      best_k = k;
    }
  }

  Solution sol = Solution::zeros(s);
  for (std::size_t t = 0; t < T && best_k > 0; ++t) {
    const auto& pick = plans[t].pick[best_k];
    std::size_t used = 0;
    for (std::size_t c = 0; c < pick.size(); ++c) {
      for (std::size_t j : tables[t][c].chosen[pick[c]]) {
        const std::size_t i = dec.components[c].assets[j];
        sol.p(i, t) = cap;
        sol.z(i, t) = 1.0;
      }
      used += pick[c];
    }
    for (std::size_t f = 0; f < best_k - used; ++f) {
      sol.p(free_order[t][f], t) = cap;
      sol.z(free_order[t][f], t) = 1.0;
    }
  }
  sol.p_F = cap * static_cast<double>(best_k);
  sol.objective = objective_value(s, sol);

  result.solution = std::move(sol);
  result.active_per_step = best_k;
  result.nodes = budget.used();
  result.lower_bound = exact ? result.solution.objective : std::min(lower, result.solution.objective);
  result.status = exact ? ExactStatus::kOptimal : ExactStatus::kBudgetExceeded;
  if (!exact) throw BudgetExceededError(std::move(result));
  return result;
}

double lp_relaxation_objective(const Scenario& s) {
  const std::size_t n = s.num_assets();
  const std::size_t T = s.horizon();
  lp::LinearProgram prog;
  auto p_var = [&](std::size_t i, std::size_t t) { return i * T + t; };
  auto z_var = [&](std::size_t i, std::size_t t) { return n * T + i * T + t; };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < T; ++t) prog.add_var(s.cost()(i, t), 0.0, s.power_cap());
  for (std::size_t k = 0; k < n * T; ++k) prog.add_var(0.0, 0.0, 1.0);
  const std::size_t pool = prog.add_var(-s.fcr_price() * static_cast<double>(T), 0.0, lp::kInfinity);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      prog.rows.push_back({{{p_var(i, t), 1.0}, {z_var(i, t), -s.power_cap()}},
                           lp::RowSense::kLessEqual, 0.0});
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    lp::Row row{{}, lp::RowSense::kEqual, 0.0};
    for (std::size_t i = 0; i < n; ++i) row.terms.emplace_back(p_var(i, t), 1.0);
    row.terms.emplace_back(pool, -1.0);
    prog.rows.push_back(std::move(row));
  }
  for (std::size_t c = 0; c < s.num_circles(); ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      lp::Row row{{}, lp::RowSense::kLessEqual, static_cast<double>(s.circle_cap())};
      for (std::size_t i : s.circle_rows(c)) row.terms.emplace_back(z_var(i, t), 1.0);
      prog.rows.push_back(std::move(row));
    }
  }
  const auto res = lp::solve_lp(prog);
  if (res.status != lp::LpStatus::kOptimal) {
    throw Error(ErrorKind::kInfeasible, "relaxation did not solve");
  }
  return res.objective;
}

}  // namespace fcrpool
