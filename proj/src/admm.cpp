#include "fcrpool/admm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "fcrpool/parallel.hpp"

namespace fcrpool {

void AdmmParams::validate() const {
  if (!(rho_circle > 0.0) || !std::isfinite(rho_circle)) {
    throw Error(ErrorKind::kInvalidArgument, "circle penalty must be positive");
  }
  if (!(rho_pool > 0.0) || !std::isfinite(rho_pool)) {
    throw Error(ErrorKind::kInvalidArgument, "pool penalty must be positive");
  }
  if (k_ip < 1) throw Error(ErrorKind::kInvalidArgument, "k_ip must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "alpha must be in (0, 1)");
  }
  if (max_iter < 1) throw Error(ErrorKind::kInvalidArgument, "max_iter must be at least 1");
}

RoundKind round_kind(const AdmmParams& params, int k) {
  if (k == 0) return params.warm_start ? RoundKind::kWarm : RoundKind::kRelaxed;
  return k % params.k_ip == 0 ? RoundKind::kInteger : RoundKind::kRelaxed;
}

AdmmState AdmmState::initial(const Scenario& s) {
  const std::size_t n = s.num_assets();
  const std::size_t T = s.horizon();
  AdmmState st{Matrix(n, T), Matrix(n, T), {}, {}, Matrix(n, T), Matrix(n, T)};
  for (std::size_t c = 0; c < s.num_circles(); ++c) {
    st.z_g.emplace_back(s.circle_rows(c).size(), T);
    st.u_g.emplace_back(s.circle_rows(c).size(), T);
  }
  return st;
}

const kernels::KernelTable& kernels_for(const AdmmParams& params) {
  return params.force_scalar ? kernels::scalar_kernels() : kernels::active_kernels();
}

void solve_local_rows(const kernels::KernelTable& kt, std::span<const double> cost,
                      double fcr_price, double power_cap, std::span<const double> p_h,
                      std::span<const double> u_h, std::span<const CircleCopy> circles,
                      const AdmmParams& params, RoundKind kind, std::span<double> p,
                      std::span<double> z) {
  const std::size_t n = cost.size();
  if (p.size() != n || z.size() != n || p_h.size() != n || u_h.size() != n) {
    throw Error(ErrorKind::kShapeMismatch, "local solve rows differ in length");
  }
  if (kind == RoundKind::kWarm) {
    kt.warm_start(cost.data(), n, fcr_price, power_cap, p.data(), z.data());
    return;
  }
  if (circles.empty()) {
    throw Error(ErrorKind::kInconsistentFamily, "asset belongs to no circle set");
  }
  std::vector<double> target(n);
  std::vector<double> a_sum(n, 0.0);
  kt.sub(p_h.data(), u_h.data(), target.data(), n);
  for (const auto& c : circles) {
    if (c.z_g.size() != n || c.u_g.size() != n) {
      throw Error(ErrorKind::kShapeMismatch, "circle copy rows differ in length");
    }
    kt.accumulate_diff(c.z_g.data(), c.u_g.data(), a_sum.data(), n);
  }
  const kernels::LocalParams lp{fcr_price, power_cap, params.rho_pool, params.rho_circle,
                                static_cast<double>(circles.size())};
  if (kind == RoundKind::kInteger) {
    kt.local_integer(cost.data(), target.data(), a_sum.data(), n, lp, p.data(), z.data());
  } else {
    kt.local_relaxed(cost.data(), target.data(), a_sum.data(), n, lp, p.data(), z.data());
  }
}

Matrix circle_project(const Matrix& z_f_rows, const Matrix& u_g_rows,
                      std::span<const AssetId> member_ids, int cap) {
  if (!z_f_rows.same_shape(u_g_rows) || member_ids.size() != z_f_rows.rows()) {
    throw Error(ErrorKind::kShapeMismatch, "circle rows and members disagree");
  }
  const std::size_t m = z_f_rows.rows();
  const std::size_t T = z_f_rows.cols();
  Matrix out(m, T);
  struct Cand {
    double a;
    AssetId id;
    std::size_t row;
  };
  std::vector<Cand> cand;
  cand.reserve(m);
  for (std::size_t t = 0; t < T; ++t) {
    cand.clear();
    for (std::size_t r = 0; r < m; ++r) {
      const double a = z_f_rows(r, t) + u_g_rows(r, t);
      if (a > 0.5) cand.push_back({a, member_ids[r], r});
    }
    const std::size_t take = std::min(cand.size(), static_cast<std::size_t>(std::max(cap, 0)));
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                      [](const Cand& x, const Cand& y) {
                        return x.a != y.a ? x.a > y.a : x.id < y.id;
                      });
    for (std::size_t j = 0; j < take; ++j) out(cand[j].row, t) = 1.0;
  }
  return out;
}

CircleStep circle_step(const kernels::KernelTable& kt, const Matrix& z_f_rows, Matrix& z_g,
                       Matrix& u_g, std::span<const AssetId> member_ids, int cap) {
  z_g = circle_project(z_f_rows, u_g, member_ids, cap);
  const std::size_t len = z_f_rows.flat().size();
  kt.accumulate_diff(z_f_rows.flat().data(), z_g.flat().data(), u_g.flat().data(), len);
  CircleStep out;
  out.residual_sq = kt.sum_squares_diff(z_f_rows.flat().data(), z_g.flat().data(), len);
  std::vector<double> active(z_f_rows.cols());
  kt.column_sums(z_f_rows.flat().data(), z_f_rows.rows(), z_f_rows.cols(), active.data());
  for (double a : active) {
    if (a > cap + 1e-9) out.within_cap = false;
  }
  return out;
}

FspProjection fsp_project(const kernels::KernelTable& kt, const Matrix& p_f, const Matrix& u_h) {
  if (!p_f.same_shape(u_h)) throw Error(ErrorKind::kShapeMismatch, "p_f and u_h differ in shape");
  const std::size_t n = p_f.rows();
  const std::size_t T = p_f.cols();
  Matrix v(n, T);
  kt.add(p_f.flat().data(), u_h.flat().data(), v.flat().data(), n * T);
  std::vector<double> col(T);
  kt.column_sums(v.flat().data(), n, T, col.data());
  FspProjection out{Matrix(n, T), 0.0};
  if (n == 0 || T == 0) return out;
  double total = 0.0;
  for (double c : col) total += c;
  out.p_F = total / static_cast<double>(T);
  if (!std::isfinite(out.p_F)) throw Error(ErrorKind::kNonFiniteInput, "FSP inputs not finite");
  std::vector<double> shift(T);
  for (std::size_t t = 0; t < T; ++t) shift[t] = (out.p_F - col[t]) / static_cast<double>(n);
  kt.add_row_broadcast(v.flat().data(), shift.data(), n, T, out.p_h.flat().data());
  return out;
}

FspStep fsp_step(const kernels::KernelTable& kt, const Matrix& p_f, Matrix& p_h, Matrix& u_h) {
  FspProjection proj = fsp_project(kt, p_f, u_h);
  p_h = std::move(proj.p_h);
  const std::size_t n = p_f.rows();
  const std::size_t T = p_f.cols();
  const std::size_t len = n * T;
  kt.accumulate_diff(p_f.flat().data(), p_h.flat().data(), u_h.flat().data(), len);

  FspStep out;
  out.p_F = proj.p_F;
  out.residual_sq = kt.sum_squares_diff(p_f.flat().data(), p_h.flat().data(), len);
  Matrix diff(n, T);
  kt.sub(p_f.flat().data(), p_h.flat().data(), diff.flat().data(), len);
  std::vector<double> col(T);
  kt.column_sums(diff.flat().data(), n, T, col.data());
  out.balance_norm = std::sqrt(kt.sum_squares(col.data(), T));
  kt.column_sums(p_f.flat().data(), n, T, col.data());
  out.pool_norm = std::sqrt(kt.sum_squares(col.data(), T));
  return out;
}

namespace {

std::size_t row_in_circle(const Scenario& s, std::size_t circle, std::size_t asset) {
  const auto& rows = s.circle_rows(circle);
  const auto it = std::lower_bound(rows.begin(), rows.end(), asset);
  if (it == rows.end() || *it != asset) {
    throw Error(ErrorKind::kInconsistentFamily, "asset missing from its circle");
  }
  return static_cast<std::size_t>(it - rows.begin());
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(m.row(rows[r]).begin(), m.row(rows[r]).end(), out.row(r).begin());
  }
  return out;
}

std::vector<AssetId> member_ids(const Scenario& s, std::size_t circle) {
  std::vector<AssetId> ids;
  for (std::size_t r : s.circle_rows(circle)) ids.push_back(s.points()[r].id);
  return ids;
}

}  // namespace

void local_solve(const Scenario& s, const AdmmState& state, const AdmmParams& params,
                 std::size_t asset, RoundKind kind, std::span<double> p, std::span<double> z) {
  if (asset >= s.num_assets()) throw Error(ErrorKind::kUnknownId, "asset row out of range");
  std::vector<CircleCopy> copies;
  for (std::size_t c : s.asset_circles(asset)) {
    const std::size_t r = row_in_circle(s, c, asset);
    copies.push_back({state.z_g[c].row(r), state.u_g[c].row(r)});
  }
  solve_local_rows(kernels_for(params), s.cost().row(asset), s.fcr_price(), s.power_cap(),
                   state.p_h.row(asset), state.u_h.row(asset), copies, params, kind, p, z);
}

void dual_updates(const Scenario& s, AdmmState& state) {
  const auto& kt = kernels::active_kernels();
  for (std::size_t c = 0; c < s.num_circles(); ++c) {
    const Matrix zf = gather_rows(state.z_f, s.circle_rows(c));
    kt.accumulate_diff(zf.flat().data(), state.z_g[c].flat().data(), state.u_g[c].flat().data(),
                       zf.flat().size());
  }
  kt.accumulate_diff(state.p_f.flat().data(), state.p_h.flat().data(), state.u_h.flat().data(),
                     state.p_f.flat().size());
}

std::string_view to_string(AdmmStatus status) {
  switch (status) {
    case AdmmStatus::kContinue: return "continue";
    case AdmmStatus::kConverged: return "converged";
    case AdmmStatus::kMaxIter: return "max_iter";
  }
  return "unknown";
}

AdmmStatus check_convergence(std::optional<bool> latest_integer_within_cap,
                             double balance_norm, double pool_norm, const AdmmParams& params,
                             int k) {
  if (latest_integer_within_cap.value_or(false) && balance_norm <= params.alpha * pool_norm) {
    return AdmmStatus::kConverged;
  }
  return k >= params.max_iter ? AdmmStatus::kMaxIter : AdmmStatus::kContinue;
}

Solution balance_schedule(const Scenario& s, const Matrix& p, const Matrix& z) {
  Solution sol{p, z, 0.0, 0.0};
  const std::size_t n = p.rows();
  const std::size_t T = p.cols();
  std::vector<double> col(T, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) col[t] += p(i, t);
  }
  if (T > 0) sol.p_F = *std::min_element(col.begin(), col.end());
  for (std::size_t t = 0; t < T; ++t) {
    const double scale = col[t] > 0.0 ? sol.p_F / col[t] : 0.0;
    for (std::size_t i = 0; i < n; ++i) sol.p(i, t) = p(i, t) * scale;
  }
  sol.objective = objective_value(s, sol);
  return sol;
}

RunMonitor::RunMonitor(const Scenario& s, const AdmmParams& params) : s_(s), params_(params) {}

AdmmStatus RunMonitor::observe(int k, RoundKind kind, const Matrix& p_f, const Matrix& z_f,
                               double circle_residual_sq, bool within_cap, const FspStep& fsp) {
  if (!std::isfinite(fsp.residual_sq) || !std::isfinite(circle_residual_sq)) {
    throw Error(ErrorKind::kNonFiniteInput, "iterate became non-finite");
  }
  const double price = s_.fcr_price();
  double objective = 0.0;
  for (std::size_t i = 0; i < p_f.rows(); ++i) {
    for (std::size_t t = 0; t < p_f.cols(); ++t) {
      objective += (s_.cost()(i, t) - price) * p_f(i, t);
    }
  }
  if (kind == RoundKind::kInteger) {
    latest_within_cap_ = within_cap;
    latest_ = balance_schedule(s_, p_f, z_f);
    if (within_cap && (!best_ || latest_->objective < best_->objective)) best_ = latest_;
  }
  trace_.push_back({k, objective, std::sqrt(fsp.residual_sq), std::sqrt(circle_residual_sq),
                    kind == RoundKind::kInteger, latest_within_cap_.value_or(false)});
  consensus_p_F_ = fsp.p_F;
  last_k_ = k;
  return check_convergence(latest_within_cap_, fsp.balance_norm, fsp.pool_norm, params_, k);
}

SolveReport RunMonitor::finish(AdmmStatus status, double wall_ms) const {
  SolveReport r;
  r.status = status;
  if (status == AdmmStatus::kConverged && latest_) {
    r.solution = *latest_;
  } else if (best_) {
    r.solution = *best_;
  } else if (latest_) {
    r.solution = *latest_;
  } else {
    r.solution = Solution::zeros(s_);
  }
  r.feasible = check_feasible(s_, r.solution).feasible();
  r.iterations = last_k_;
  r.consensus_p_F = consensus_p_F_;
  r.trace = trace_;
  r.wall_ms = wall_ms;
  return r;
}

SolveReport run_admm(const Scenario& s, const AdmmParams& params, const AdmmCallbacks& callbacks) {
  params.validate();
  const auto& kt = kernels_for(params);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = s.num_assets();
  const std::size_t n_circles = s.num_circles();

  AdmmState st = AdmmState::initial(s);
  std::vector<std::vector<AssetId>> ids(n_circles);
  std::vector<std::vector<std::size_t>> slot(n);  // asset -> row inside each of its circles
  for (std::size_t c = 0; c < n_circles; ++c) ids[c] = member_ids(s, c);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c : s.asset_circles(i)) slot[i].push_back(row_in_circle(s, c, i));
  }

  RunMonitor monitor(s, params);
  std::vector<CircleStep> circle_out(n_circles);
  FspStep fsp_out;
  AdmmStatus status = AdmmStatus::kContinue;
  for (int k = 0; status == AdmmStatus::kContinue; ++k) {
    st.k = k;
    const RoundKind kind = round_kind(params, k);

    parallel_for(n, params.workers, [&](std::size_t i) {
      const auto& circles = s.asset_circles(i);
      std::vector<CircleCopy> copies;
      copies.reserve(circles.size());
      for (std::size_t j = 0; j < circles.size(); ++j) {
        copies.push_back({st.z_g[circles[j]].row(slot[i][j]), st.u_g[circles[j]].row(slot[i][j])});
      }
      solve_local_rows(kt, s.cost().row(i), s.fcr_price(), s.power_cap(), st.p_h.row(i),
                       st.u_h.row(i), copies, params, kind, st.p_f.row(i), st.z_f.row(i));
    });

    // Circles and the FSP read disjoint copies; the last task is the FSP.
    parallel_for(n_circles + 1, params.workers, [&](std::size_t c) {
      if (c == n_circles) {
        fsp_out = fsp_step(kt, st.p_f, st.p_h, st.u_h);
        return;
      }
      const Matrix zf = gather_rows(st.z_f, s.circle_rows(c));
      circle_out[c] = circle_step(kt, zf, st.z_g[c], st.u_g[c], ids[c], s.circle_cap());
    });
    st.p_F = fsp_out.p_F;

    double circle_sq = 0.0;
    bool within = true;
    for (const auto& c : circle_out) {
      circle_sq += c.residual_sq;
      within = within && c.within_cap;
    }
    status = monitor.observe(k, kind, st.p_f, st.z_f, circle_sq, within, fsp_out);
    if (callbacks.on_iteration) {
      callbacks.on_iteration({monitor.trace().back(), kind, st.p_f, st.z_f});
    }
  }
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  SolveReport report = monitor.finish(status, ms);
  report.kernel_isa = std::string(kernels::to_string(kt.isa));
  return report;
}

std::string trace_csv(std::span<const TraceRow> trace) {
  std::string out = "k,objective,primal_res_fsp,primal_res_circles,integer_round,feasible\n";
  char buf[160];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%d,%d\n", r.k, r.objective,
                  r.primal_res_fsp, r.primal_res_circles, r.integer_round ? 1 : 0,
                  r.feasible ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace fcrpool
