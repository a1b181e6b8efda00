#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <unordered_set>

#include "fcrpool/model.hpp"
#include "fcrpool/rng.hpp"
#include "fcrpool/sampling.hpp"

namespace fcrpool {

CapacityResult max_usable_capacity(std::span<const ConnectionPoint> points,
                                   const CircleFamily& family,
                                   std::span<const AssetId> participants, Caps caps) {
  std::unordered_set<AssetId> chosen(participants.begin(), participants.end());
  if (chosen.size() != participants.size()) {
    throw Error(ErrorKind::kDuplicateId, "participant listed twice");
  }
  std::vector<ConnectionPoint> pool;
  for (const auto& p : points) {
    if (chosen.contains(p.id)) pool.push_back(p);
  }
  if (pool.size() != chosen.size()) {
    throw Error(ErrorKind::kUnknownId, "participant is not a known connection point");
  }
  CapacityResult out;
  out.participants = pool.size();
  if (pool.empty()) return out;

  // Every circle's constraint restricted to the participants.
  std::set<std::vector<AssetId>> restricted;
  std::vector<CircleSet> sets;
  for (const auto& s : family.sets()) {
    CircleSet r{{}, s.center, s.radius};
    for (AssetId id : s.members) {
      if (chosen.contains(id)) r.members.push_back(id);
    }
    if (!r.members.empty() && restricted.insert(r.members).second) sets.push_back(std::move(r));
  }
  // Participants the family does not mention are unconstrained singletons.
  std::unordered_set<AssetId> covered;
  for (const auto& s : sets) covered.insert(s.members.begin(), s.members.end());
  for (const auto& p : pool) {
    if (!covered.contains(p.id)) sets.push_back({{p.id}, p.position(), family.radius()});
  }

  Scenario scenario(pool, CircleFamily(family.radius(), std::move(sets)),
                    Matrix(pool.size(), 1, 0.0), 1.0, caps);
  const ExactResult exact = solve_exact(scenario);
  out.capacity_kw = exact.solution.p_F;
  out.usable_fraction = out.capacity_kw / (caps.power_cap * static_cast<double>(pool.size()));
  return out;
}

MonteCarloResult monte_carlo_usable_fraction(std::span<const ConnectionPoint> points,
                                             double rate, std::size_t trials,
                                             std::uint64_t seed, double radius, Caps caps) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "participation rate must be in (0, 1]");
  }
  if (trials < 1) throw Error(ErrorKind::kInvalidArgument, "need at least one trial");
  MonteCarloResult out;
  out.sample_size = sample_count(points.size(), rate);
  if (out.sample_size == 0) {
    throw Error(ErrorKind::kEmptySample, "participation rate selects no connection point");
  }
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(derive_seed(seed, "participants", rate, trial));
    const auto picked = sample_without_replacement(points.size(), out.sample_size, rng);
    std::vector<ConnectionPoint> pool;
    std::vector<AssetId> ids;
    for (std::size_t idx : picked) {
      pool.push_back(points[idx]);
      ids.push_back(points[idx].id);
    }
    const CircleFamily family = build_circle_family(pool, radius);
    const CapacityResult cap = max_usable_capacity(pool, family, ids, caps);
    out.fractions.push_back(cap.usable_fraction);
    out.capacities_kw.push_back(cap.capacity_kw);
  }
  double sum = 0.0;
  for (double f : out.fractions) sum += f;
  out.mean_fraction = sum / static_cast<double>(out.fractions.size());
  return out;
}

}  // namespace fcrpool
