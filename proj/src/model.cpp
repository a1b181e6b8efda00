#include "fcrpool/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

namespace fcrpool {

Scenario::Scenario(std::vector<ConnectionPoint> points, CircleFamily family, Matrix cost,
                   double fcr_price, Caps caps, std::uint64_t rng_seed)
    : points_(std::move(points)),
      family_(std::move(family)),
      cost_(std::move(cost)),
      fcr_price_(fcr_price),
      caps_(caps),
      rng_seed_(rng_seed) {
  if (points_.empty()) throw Error(ErrorKind::kEmptyInput, "scenario has no assets");
  if (cost_.rows() != points_.size()) {
    throw Error(ErrorKind::kShapeMismatch, "cost matrix needs one row per asset");
  }
  if (cost_.cols() < 1) throw Error(ErrorKind::kInvalidArgument, "horizon must be >= 1");
  if (!(caps_.power_cap > 0.0)) throw Error(ErrorKind::kInvalidArgument, "power_cap must be > 0");
  if (caps_.circle_cap < 1) throw Error(ErrorKind::kInvalidArgument, "circle_cap must be >= 1");
  if (!std::isfinite(fcr_price_)) throw Error(ErrorKind::kNonFiniteInput, "fcr_price");
  for (double c : cost_.flat()) {
    if (!std::isfinite(c)) throw Error(ErrorKind::kNonFiniteInput, "cost matrix");
  }

  std::unordered_map<AssetId, std::size_t> row_of;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!row_of.emplace(points_[i].id, i).second) {
      throw Error(ErrorKind::kDuplicateId, std::to_string(points_[i].id));
    }
  }
  asset_circles_.resize(points_.size());
  circle_rows_.reserve(family_.size());
  for (std::size_t s = 0; s < family_.size(); ++s) {
    std::vector<std::size_t> rows;
    for (AssetId id : family_.sets()[s].members) {
      auto it = row_of.find(id);
      if (it == row_of.end()) {
        throw Error(ErrorKind::kInconsistentFamily,
                    "circle member " + std::to_string(id) + " is not a scenario asset");
      }
      rows.push_back(it->second);
      asset_circles_[it->second].push_back(s);
    }
    std::sort(rows.begin(), rows.end());
    circle_rows_.push_back(std::move(rows));
  }
}

Solution Solution::zeros(const Scenario& s) {
  return {Matrix(s.num_assets(), s.horizon()), Matrix(s.num_assets(), s.horizon()), 0.0, 0.0};
}

double objective_value(const Scenario& s, const Solution& sol) {
  if (!sol.p.same_shape(s.cost())) {
    throw Error(ErrorKind::kShapeMismatch, "solution power matrix does not match scenario");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < s.num_assets(); ++i) {
    double row = 0.0;
    const auto c = s.cost().row(i);
    const auto p = sol.p.row(i);
    for (std::size_t t = 0; t < c.size(); ++t) row += c[t] * p[t];
    total += row;
  }
  return total - s.fcr_price() * sol.p_F * static_cast<double>(s.horizon());
}

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::kNegativePower: return "negative_power";
    case Violation::Kind::kPowerCap: return "power_cap";
    case Violation::Kind::kNonBinary: return "non_binary";
    case Violation::Kind::kBalance: return "balance";
    case Violation::Kind::kCircleCap: return "circle_cap";
  }
  return "unknown";
}

FeasibilityReport check_feasible(const Scenario& s, const Solution& sol, double tol) {
  if (!sol.p.same_shape(s.cost()) || !sol.z.same_shape(s.cost())) {
    throw Error(ErrorKind::kShapeMismatch, "solution does not match scenario");
  }
  FeasibilityReport report;
  const std::size_t n = s.num_assets();
  const std::size_t T = s.horizon();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      const double p = sol.p(i, t);
      const double z = sol.z(i, t);
      if (p < -tol) report.violations.push_back({Violation::Kind::kNegativePower, i, t, 0, -p});
      const double over = p - s.power_cap() * z;
      if (over > tol) report.violations.push_back({Violation::Kind::kPowerCap, i, t, 0, over});
      const double off = std::min(std::abs(z), std::abs(z - 1.0));
      if (off > tol) report.violations.push_back({Violation::Kind::kNonBinary, i, t, 0, off});
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += sol.p(i, t);
    const double gap = std::abs(sum - sol.p_F);
    if (gap > tol) report.violations.push_back({Violation::Kind::kBalance, 0, t, 0, gap});
  }
  for (std::size_t c = 0; c < s.num_circles(); ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      double active = 0.0;
      for (std::size_t i : s.circle_rows(c)) active += sol.z(i, t);
      const double excess = active - static_cast<double>(s.circle_cap());
      if (excess > tol) report.violations.push_back({Violation::Kind::kCircleCap, 0, t, c, excess});
    }
  }
  return report;
}

}  // namespace fcrpool
