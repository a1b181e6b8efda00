#pragma once

// Batch experiments behind the command-line front end. Each returns plain
// rows; the CLI only parses flags and writes CSV / JSON.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fcrpool/admm.hpp"
#include "fcrpool/ingest.hpp"
#include "fcrpool/model.hpp"

namespace fcrpool::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitBudget = 3;

// ---------------------------------------------------------------------------
// circles

struct FamilySummary {
  std::size_t n_sets = 0;
  std::size_t max_set_size = 0;
  std::size_t sets_over_cap = 0;
};

FamilySummary summarize(const CircleFamily& family, int circle_cap = kDefaultCircleCap);

// ---------------------------------------------------------------------------
// capacity

struct CapacityRow {
  double rate = 0.0;
  std::optional<std::size_t> trial;  // empty on the per-rate mean row
  double usable_fraction = 0.0;
  double total_kw = 0.0;
};

std::vector<CapacityRow> capacity_experiment(const ExperimentSpec& spec);
std::string capacity_csv(const std::vector<CapacityRow>& rows);

// ---------------------------------------------------------------------------
// sweep

/// (obj - exact) / |exact|; 0 when both are 0.
double relative_gap(double objective, double exact_objective);

struct SweepRow {
  double rho_c = 0.0;
  std::size_t trial = 0;
  int iterations = 0;
  double gap = 0.0;
  double objective = 0.0;
  double exact_objective = 0.0;
  AdmmStatus status = AdmmStatus::kContinue;
};

struct SweepMean {
  double rho_c = 0.0;
  double mean_iterations = 0.0;
  double mean_gap = 0.0;
  std::size_t converged = 0;
  std::size_t runs = 0;
};

/// One scenario per trial index (shared by every rho), exact solve once per
/// scenario, one ADMM run per (rho, trial). `base` supplies every other
/// parameter.
std::vector<SweepRow> rho_sweep(const ExperimentSpec& spec, double rate,
                                const std::vector<double>& rho_values, std::size_t trials,
                                const AdmmParams& base);
std::vector<SweepMean> sweep_means(const std::vector<SweepRow>& rows);
std::string sweep_csv(const std::vector<SweepRow>& rows, const std::vector<SweepMean>& means);

// ---------------------------------------------------------------------------
// bench

/// A city of contiguous square neighborhoods laid out left to right; each
/// neighborhood is a street grid of `points_per_neighborhood` connection
/// points, of which `rate` participate.
struct BenchOptions {
  std::size_t points_per_neighborhood = 500;
  double pitch = 14.0;       // m between neighboring connection points
  double rate = 0.1;
  std::size_t horizon = 24;
  std::size_t repetitions = 3;
  std::size_t exact_cutoff = 0;  // skip exact above this many assets; 0 = never
  std::uint64_t seed = 0;
  AdmmParams params;
};

/// Neighborhood count for a target asset count: ceil(n / (rate * per_neighborhood)).
ExperimentSpec bench_spec(std::size_t n_assets, const BenchOptions& options);

struct BenchRow {
  std::size_t n_assets = 0;
  std::optional<double> t_exact_ms;  // median; empty above the cutoff
  double t_admm_ms = 0.0;            // median
  std::optional<double> exact_objective;
  std::optional<double> exact_bound;
  double admm_objective = 0.0;
  int admm_iterations = 0;
  AdmmStatus admm_status = AdmmStatus::kContinue;
};

std::vector<BenchRow> bench(const std::vector<std::size_t>& sizes, const BenchOptions& options);
std::string bench_csv(const std::vector<BenchRow>& rows);

/// Smallest size at which ADMM was faster than the exact solver, if any.
std::optional<std::size_t> crossover(const std::vector<BenchRow>& rows);

// ---------------------------------------------------------------------------

/// Entry point of the `fcrpool` tool. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fcrpool::cli
