#pragma once

// Three-way consensus ADMM for the pooling problem. Every asset keeps a
// private copy (p^f, z^f) of its schedule; circle agents keep binary copies
// z^g of the activations of their members; the FSP keeps a balanced copy
// p^h. Scaled duals u^g, u^h drive the copies together.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcrpool/kernels.hpp"
#include "fcrpool/matrix.hpp"
#include "fcrpool/model.hpp"

namespace fcrpool {

struct AdmmParams {
  double rho_circle = 0.3;  // z^f = z^g coupling, --rho-c
  double rho_pool = 0.25;   // p^f = p^h coupling, --rho-f
  int k_ip = 10;
  double alpha = 0.005;
  int max_iter = 1000;
  bool warm_start = true;
  unsigned workers = 1;
  bool force_scalar = false;  // use reference kernels even if SIMD is available

  void validate() const;  // throws kInvalidArgument
};

enum class RoundKind { kWarm, kRelaxed, kInteger };

/// Round type of iteration k.
RoundKind round_kind(const AdmmParams& params, int k);

struct AdmmState {
  Matrix p_f, z_f;            // assets x steps
  std::vector<Matrix> z_g;    // per circle, members x steps
  std::vector<Matrix> u_g;
  Matrix p_h, u_h;            // assets x steps
  double p_F = 0.0;
  int k = 0;

  static AdmmState initial(const Scenario& s);
};

const kernels::KernelTable& kernels_for(const AdmmParams& params);

// ---------------------------------------------------------------------------
// Row-level steps shared by the in-process solver and the agent runtime.

/// Circle copies of one asset's activation: z^g and u^g rows.
struct CircleCopy {
  std::span<const double> z_g;
  std::span<const double> u_g;
};

/// Local solve of one asset from its private costs and the latest copies.
/// `circles` must be in ascending circle order.
void solve_local_rows(const kernels::KernelTable& kt, std::span<const double> cost,
                      double fcr_price, double power_cap, std::span<const double> p_h,
                      std::span<const double> u_h, std::span<const CircleCopy> circles,
                      const AdmmParams& params, RoundKind kind, std::span<double> p,
                      std::span<double> z);

/// Binary projection of one circle: per step, ones on the largest
/// a = z^f + u^g above one half, at most `cap` of them; ties go to the lower id.
Matrix circle_project(const Matrix& z_f_rows, const Matrix& u_g_rows,
                      std::span<const AssetId> member_ids, int cap);

struct CircleStep {
  double residual_sq = 0.0;  // ||z^f - z^g||^2 over the circle's rows
  bool within_cap = true;    // sum of z^f rows <= cap at every step
};

/// Projection, dual update and residual of one circle, in place.
CircleStep circle_step(const kernels::KernelTable& kt, const Matrix& z_f_rows, Matrix& z_g,
                       Matrix& u_g, std::span<const AssetId> member_ids, int cap);

struct FspProjection {
  Matrix p_h;
  double p_F = 0.0;
};

/// Closest (least squares) p^h to p^f + u^h with equal column sums.
FspProjection fsp_project(const kernels::KernelTable& kt, const Matrix& p_f, const Matrix& u_h);

struct FspStep {
  double p_F = 0.0;
  double residual_sq = 0.0;    // ||p^f - p^h||^2
  double balance_norm = 0.0;   // ||sum_i (p^f - p^h)||, per-step sums
  double pool_norm = 0.0;      // ||sum_i p^f||
};

/// Projection, dual update and residuals at the FSP, in place.
FspStep fsp_step(const kernels::KernelTable& kt, const Matrix& p_f, Matrix& p_h, Matrix& u_h);

// ---------------------------------------------------------------------------
// Single-operation wrappers over a full state.

void local_solve(const Scenario& s, const AdmmState& state, const AdmmParams& params,
                 std::size_t asset, RoundKind kind, std::span<double> p, std::span<double> z);

/// u^g += z^f - z^g and u^h += p^f - p^h.
void dual_updates(const Scenario& s, AdmmState& state);

enum class AdmmStatus { kContinue, kConverged, kMaxIter };

std::string_view to_string(AdmmStatus status);

/// `latest_integer_within_cap` is empty until an integer round has run.
AdmmStatus check_convergence(std::optional<bool> latest_integer_within_cap,
                             double balance_norm, double pool_norm, const AdmmParams& params,
                             int k);

// ---------------------------------------------------------------------------
// Full runs.

struct TraceRow {
  int k = 0;
  double objective = 0.0;          // sum (c - c_F) p^f
  double primal_res_fsp = 0.0;     // ||p^f - p^h||
  double primal_res_circles = 0.0; // sqrt(sum_s ||z^f - z^g||^2)
  bool integer_round = false;
  bool feasible = false;           // latest integer round within every cap
  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct SolveReport {
  AdmmStatus status = AdmmStatus::kContinue;
  Solution solution;
  bool feasible = false;
  int iterations = 0;
  double consensus_p_F = 0.0;   // FSP copy at the last iteration
  std::vector<TraceRow> trace;
  double wall_ms = 0.0;
  std::string kernel_isa;
};

struct IterationView {
  const TraceRow& row;
  RoundKind kind;
  const Matrix& p_f;
  const Matrix& z_f;
};

struct AdmmCallbacks {
  std::function<void(const IterationView&)> on_iteration;
};

/// Per-iteration bookkeeping common to every execution backend: trace rows,
/// the latest integer round, the best feasible incumbent and the stop test.
class RunMonitor {
 public:
  RunMonitor(const Scenario& s, const AdmmParams& params);

  /// Record iteration k. `within_cap` is the AND over circles of
  /// CircleStep::within_cap and is only read on integer rounds.
  AdmmStatus observe(int k, RoundKind kind, const Matrix& p_f, const Matrix& z_f,
                     double circle_residual_sq, bool within_cap, const FspStep& fsp);

  SolveReport finish(AdmmStatus status, double wall_ms) const;
  const std::vector<TraceRow>& trace() const noexcept { return trace_; }

 private:
  const Scenario& s_;
  const AdmmParams& params_;
  std::vector<TraceRow> trace_;
  std::optional<bool> latest_within_cap_;
  std::optional<Solution> latest_;
  std::optional<Solution> best_;
  double consensus_p_F_ = 0.0;
  int last_k_ = 0;
};

/// Balances an integer-round schedule: the pool becomes the smallest
/// per-step total and every step's column is scaled down to it.
Solution balance_schedule(const Scenario& s, const Matrix& p, const Matrix& z);

SolveReport run_admm(const Scenario& s, const AdmmParams& params,
                     const AdmmCallbacks& callbacks = {});

/// k, objective, primal_res_fsp, primal_res_circles, integer_round, feasible
std::string trace_csv(std::span<const TraceRow> trace);

}  // namespace fcrpool
