#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fcrpool/error.hpp"
#include "fcrpool/geometry.hpp"
#include "fcrpool/matrix.hpp"

namespace fcrpool {

inline constexpr double kDefaultPowerCap = 5.0;   // kW per active connection point
inline constexpr int kDefaultCircleCap = 10;      // active points per circle
inline constexpr double kBalanceTolerance = 1e-6; // kW, sum_i p_it = p_F

struct Caps {
  double power_cap = kDefaultPowerCap;
  int circle_cap = kDefaultCircleCap;
};

/// The pooling problem instance. Row i of every matrix belongs to points()[i];
/// circle membership is also available as row indices.
class Scenario {
 public:
  Scenario(std::vector<ConnectionPoint> points, CircleFamily family, Matrix cost,
           double fcr_price, Caps caps = {}, std::uint64_t rng_seed = 0);

  const std::vector<ConnectionPoint>& points() const noexcept { return points_; }
  const CircleFamily& family() const noexcept { return family_; }
  const Matrix& cost() const noexcept { return cost_; }
  double fcr_price() const noexcept { return fcr_price_; }
  double power_cap() const noexcept { return caps_.power_cap; }
  int circle_cap() const noexcept { return caps_.circle_cap; }
  const Caps& caps() const noexcept { return caps_; }
  std::uint64_t rng_seed() const noexcept { return rng_seed_; }

  std::size_t num_assets() const noexcept { return points_.size(); }
  std::size_t horizon() const noexcept { return cost_.cols(); }
  std::size_t num_circles() const noexcept { return circle_rows_.size(); }

  /// Members of circle s as asset row indices, ascending.
  const std::vector<std::size_t>& circle_rows(std::size_t s) const { return circle_rows_[s]; }
  /// Circles containing asset row i, ascending.
  const std::vector<std::size_t>& asset_circles(std::size_t i) const { return asset_circles_[i]; }

 private:
  std::vector<ConnectionPoint> points_;
  CircleFamily family_;
  Matrix cost_;
  double fcr_price_;
  Caps caps_;
  std::uint64_t rng_seed_;
  std::vector<std::vector<std::size_t>> circle_rows_;
  std::vector<std::vector<std::size_t>> asset_circles_;
};

struct Solution {
  Matrix p;        // kW, assets x steps
  Matrix z;        // activation, assets x steps
  double p_F = 0.0;
  double objective = 0.0;

  static Solution zeros(const Scenario& s);
};

/// sum_i c_i' p_i - c_F p_F n_T for the linear cost model.
double objective_value(const Scenario& s, const Solution& sol);

struct Violation {
  enum class Kind { kNegativePower, kPowerCap, kNonBinary, kBalance, kCircleCap };
  Kind kind;
  std::size_t asset = 0;   // row index (kNegativePower, kPowerCap, kNonBinary)
  std::size_t step = 0;
  std::size_t circle = 0;  // kCircleCap only
  double magnitude = 0.0;
};

std::string_view to_string(Violation::Kind kind);

struct FeasibilityReport {
  std::vector<Violation> violations;
  bool feasible() const noexcept { return violations.empty(); }
};

FeasibilityReport check_feasible(const Scenario& s, const Solution& sol,
                                 double tol = kBalanceTolerance);

// ---------------------------------------------------------------------------
// Exact solver

struct ExactOptions {
  double gap_tol = 1e-9;
  std::size_t node_limit = 2000000;  // summed over all subproblems
};

enum class ExactStatus { kOptimal, kBudgetExceeded };

struct ExactResult {
  ExactStatus status = ExactStatus::kOptimal;
  Solution solution;           // best known (all-zero if nothing better)
  double lower_bound = 0.0;    // proven bound on the optimum
  std::size_t nodes = 0;
  std::size_t subproblems = 0;
  std::size_t active_per_step = 0;  // K: assets at full power in every step
};

/// Raised by solve_exact when the node budget runs out; carries the partial
/// result (incumbent and bound).
class BudgetExceededError : public Error {
 public:
  explicit BudgetExceededError(ExactResult partial)
      : Error(ErrorKind::kBudgetExceeded, "branch-and-bound node limit reached"),
        partial_(std::move(partial)) {}
  const ExactResult& partial() const noexcept { return partial_; }

 private:
  ExactResult partial_;
};

/// Globally optimal pooling schedule by branch and bound.
ExactResult solve_exact(const Scenario& s, const ExactOptions& options = {});

/// Optimal value of the continuous relaxation (z in [0,1]) of the full
/// problem, as one LP. Intended for small instances.
double lp_relaxation_objective(const Scenario& s);

// ---------------------------------------------------------------------------
// Capacity analysis with zero local costs and unit price.

struct CapacityResult {
  double capacity_kw = 0.0;
  double usable_fraction = 1.0;
  std::size_t participants = 0;
};

CapacityResult max_usable_capacity(std::span<const ConnectionPoint> points,
                                   const CircleFamily& family,
                                   std::span<const AssetId> participants, Caps caps = {});

struct MonteCarloResult {
  std::vector<double> fractions;
  std::vector<double> capacities_kw;
  std::size_t sample_size = 0;
  double mean_fraction = 0.0;
};

/// Samples floor(rate * n) participants per trial (seeded, without
/// replacement), rebuilds the circle family over them and records the
/// usable fraction.
MonteCarloResult monte_carlo_usable_fraction(std::span<const ConnectionPoint> points,
                                             double rate, std::size_t trials,
                                             std::uint64_t seed, double radius = 100.0,
                                             Caps caps = {});

}  // namespace fcrpool
