#include "fcrpool/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unordered_set>

#include "fcrpool/error.hpp"
#include "fcrpool/parallel.hpp"

namespace fcrpool {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// ---------------------------------------------------------------------------
// CircleFamily

CircleFamily::CircleFamily(double radius, std::vector<CircleSet> sets)
    : radius_(radius), sets_(std::move(sets)) {
  for (std::size_t s = 0; s < sets_.size(); ++s) {
    for (AssetId id : sets_[s].members) per_asset_[id].push_back(s);
  }
}

std::span<const std::size_t> CircleFamily::sets_of(AssetId id) const {
  auto it = per_asset_.find(id);
  if (it == per_asset_.end()) return {};
  return it->second;
}

std::size_t CircleFamily::max_set_size() const {
  std::size_t best = 0;
  for (const auto& s : sets_) best = std::max(best, s.members.size());
  return best;
}

std::size_t CircleFamily::count_larger_than(std::size_t n) const {
  return static_cast<std::size_t>(std::count_if(
      sets_.begin(), sets_.end(), [n](const CircleSet& s) { return s.members.size() > n; }));
}

std::vector<std::vector<AssetId>> CircleFamily::member_sets() const {
  std::vector<std::vector<AssetId>> out;
  out.reserve(sets_.size());
  for (const auto& s : sets_) out.push_back(s.members);
  return out;
}

// ---------------------------------------------------------------------------
// NeighborGrid

NeighborGrid::NeighborGrid(std::span<const ConnectionPoint> points, double cell_size)
    : points_(points), cell_(cell_size) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    cells_[key_of(points[i].position())].push_back(i);
  }
}

NeighborGrid::CellKey NeighborGrid::key_of(Point2 p) const {
  return {static_cast<std::int64_t>(std::floor(p.x / cell_)),
          static_cast<std::int64_t>(std::floor(p.y / cell_))};
}

std::vector<std::size_t> NeighborGrid::query(Point2 center, double d) const {
  const CellKey k = key_of(center);
  std::vector<std::size_t> out;
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      auto it = cells_.find({k.cx + dx, k.cy + dy});
      if (it == cells_.end()) continue;
      for (std::size_t idx : it->second) {
        if (distance(points_[idx].position(), center) <= d + kGeometryTolerance) {
          out.push_back(idx);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Pair circles

std::pair<Point2, Point2> two_circle_centers(const ConnectionPoint& p,
                                             const ConnectionPoint& q, double r) {
  if (!(r > 0.0)) throw Error(ErrorKind::kInvalidArgument, "radius must be positive");
  const double len = distance(p.position(), q.position());
  if (len == 0.0) {
    throw Error(ErrorKind::kDegeneratePair,
                "assets " + std::to_string(p.id) + " and " + std::to_string(q.id) +
                    " share a location");
  }
  if (len > 2.0 * r + kGeometryTolerance) {
    throw Error(ErrorKind::kTooFarApart, "assets " + std::to_string(p.id) + " and " +
                                             std::to_string(q.id) + " are " +
                                             std::to_string(len) + " m apart");
  }
  const double half = len / 2.0;
  // Clamped so that pairs within tolerance of 2r land on the midpoint.
  const double offset = std::sqrt(std::max(0.0, r * r - half * half));
  const double dir0 = (p.x - q.x) / len;
  const double dir1 = -(p.y - q.y) / len;
  const Point2 mid{(p.x + q.x) / 2.0, (p.y + q.y) / 2.0};
  return {Point2{mid.x + offset * dir1, mid.y + offset * dir0},
          Point2{mid.x - offset * dir1, mid.y - offset * dir0}};
}

std::vector<AssetId> neighbors_within(std::span<const ConnectionPoint> points, AssetId id,
                                      double d) {
  if (!(d > 0.0)) throw Error(ErrorKind::kInvalidArgument, "distance must be positive");
  auto it = std::find_if(points.begin(), points.end(),
                         [id](const ConnectionPoint& p) { return p.id == id; });
  if (it == points.end()) throw Error(ErrorKind::kUnknownId, std::to_string(id));
  NeighborGrid grid(points, d);
  std::vector<AssetId> out;
  for (std::size_t idx : grid.query(it->position(), d)) {
    if (points[idx].id != id) out.push_back(points[idx].id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Smallest enclosing circle

namespace {

bool inside(const Circle& c, Point2 p) {
  return distance(c.center, p) <= c.radius + kGeometryTolerance * std::max(1.0, c.radius);
}

Circle diametral(Point2 a, Point2 b) {
  const Point2 mid{(a.x + b.x) / 2.0, (a.y + b.y) / 2.0};
  return {mid, std::max(distance(mid, a), distance(mid, b))};
}

Circle through_three(Point2 a, Point2 b, Point2 c) {
  const double bx = b.x - a.x, by = b.y - a.y;
  const double cx = c.x - a.x, cy = c.y - a.y;
  const double det = 2.0 * (bx * cy - by * cx);
  const double scale = std::max({std::abs(bx), std::abs(by), std::abs(cx), std::abs(cy), 1.0});
  if (std::abs(det) <= 1e-14 * scale * scale) {
    // Collinear: the farthest pair spans the circle.
    Circle best = diametral(a, b);
    for (const Circle& cand : {diametral(a, c), diametral(b, c)}) {
      if (cand.radius > best.radius) best = cand;
    }
    return best;
  }
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  const Point2 center{a.x + (cy * b2 - by * c2) / det, a.y + (bx * c2 - cx * b2) / det};
  return {center, std::max({distance(center, a), distance(center, b), distance(center, c)})};
}

}  // namespace

Circle smallest_enclosing_circle(std::span<const Point2> points) {
  if (points.empty()) throw Error(ErrorKind::kEmptyInput, "no points to enclose");
  std::vector<Point2> pts(points.begin(), points.end());
  std::mt19937_64 rng(0x5ec5ec5ecULL);
  std::shuffle(pts.begin(), pts.end(), rng);

  Circle c{pts[0], 0.0};
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (inside(c, pts[i])) continue;
    c = {pts[i], 0.0};
    for (std::size_t j = 0; j < i; ++j) {
      if (inside(c, pts[j])) continue;
      c = diametral(pts[i], pts[j]);
      for (std::size_t k = 0; k < j; ++k) {
        if (inside(c, pts[k])) continue;
        c = through_three(pts[i], pts[j], pts[k]);
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Circle family

namespace {

bool is_subset(const std::vector<AssetId>& a, const std::vector<AssetId>& b) {
  return a.size() <= b.size() && std::includes(b.begin(), b.end(), a.begin(), a.end());
}

void validate_points(std::span<const ConnectionPoint> points) {
  if (points.empty()) throw Error(ErrorKind::kEmptyInput, "no connection points");
  std::unordered_set<AssetId> seen;
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorKind::kNonFiniteInput, "asset " + std::to_string(p.id));
    }
    if (!seen.insert(p.id).second) {
      throw Error(ErrorKind::kDuplicateId, std::to_string(p.id));
    }
  }
}

// Local circle sets of one asset (the per-asset loop body of the
// construction). `local` holds indices of the asset and its 2r neighbors.
std::vector<CircleSet> sets_through_asset(std::span<const ConnectionPoint> points,
                                          std::size_t self,
                                          const std::vector<std::size_t>& local, double r) {
  std::vector<CircleSet> out;
  const ConnectionPoint& me = points[self];

  auto members_within = [&](Point2 c) {
    std::vector<AssetId> ids;
    for (std::size_t idx : local) {
      if (distance(points[idx].position(), c) <= r + kGeometryTolerance) {
        ids.push_back(points[idx].id);
      }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  };

  auto offer = [&](std::vector<AssetId> candidate, Point2 center) {
    std::erase_if(out, [&](const CircleSet& s) { return is_subset(s.members, candidate); });
    for (const auto& s : out) {
      if (is_subset(candidate, s.members)) return;
    }
    out.push_back({std::move(candidate), center, r});
  };

  for (std::size_t other : local) {
    if (other == self) continue;
    const ConnectionPoint& q = points[other];
    if (q.x == me.x && q.y == me.y) continue;
    const auto [c1, c2] = two_circle_centers(me, q, r);
    auto set1 = members_within(c1);
    if (c1 == c2) {
      offer(std::move(set1), c1);
      continue;
    }
    auto set2 = members_within(c2);
    // Both candidates are tested against the pre-existing sets before either
    // is inserted.
    std::erase_if(out, [&](const CircleSet& s) {
      return is_subset(s.members, set1) || is_subset(s.members, set2);
    });
    offer(std::move(set1), c1);
    offer(std::move(set2), c2);
  }

  if (out.empty()) {
    // Isolated, or only co-located neighbors.
    std::vector<AssetId> ids;
    for (std::size_t idx : local) {
      if (points[idx].x == me.x && points[idx].y == me.y) ids.push_back(points[idx].id);
    }
    std::sort(ids.begin(), ids.end());
    out.push_back({std::move(ids), me.position(), r});
  }
  return out;
}

}  // namespace

CircleFamily build_circle_family(std::span<const ConnectionPoint> points, double r,
                                 unsigned workers) {
  if (!(r > 0.0)) throw Error(ErrorKind::kInvalidArgument, "radius must be positive");
  validate_points(points);

  // Process assets in id order so the merge below is independent of input order.
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return points[a].id < points[b].id; });

  const NeighborGrid grid(points, 2.0 * r);
  std::vector<std::vector<CircleSet>> local_sets(points.size());
  parallel_for(order.size(), workers, [&](std::size_t k) {
    const std::size_t self = order[k];
    const auto local = grid.query(points[self].position(), 2.0 * r);
    local_sets[k] = sets_through_asset(points, self, local, r);
  });

  // Union with deduplication; first witness wins.
  std::vector<CircleSet> merged;
  std::set<std::vector<AssetId>> seen;
  for (auto& sets : local_sets) {
    for (auto& s : sets) {
      if (seen.insert(s.members).second) merged.push_back(std::move(s));
    }
  }

  // A set maximal among circles through one asset can still be contained in
  // a set found from another asset; drop those.
  std::map<AssetId, std::vector<std::size_t>> by_asset;
  for (std::size_t s = 0; s < merged.size(); ++s) {
    for (AssetId id : merged[s].members) by_asset[id].push_back(s);
  }
  std::vector<bool> dominated(merged.size(), false);
  for (std::size_t s = 0; s < merged.size(); ++s) {
    for (std::size_t other : by_asset[merged[s].members.front()]) {
      if (other != s && merged[other].members.size() > merged[s].members.size() &&
          is_subset(merged[s].members, merged[other].members)) {
        dominated[s] = true;
        break;
      }
    }
  }
  std::vector<CircleSet> family;
  for (std::size_t s = 0; s < merged.size(); ++s) {
    if (!dominated[s]) family.push_back(std::move(merged[s]));
  }
  std::sort(family.begin(), family.end(),
            [](const CircleSet& a, const CircleSet& b) { return a.members < b.members; });
  return CircleFamily(r, std::move(family));
}

}  // namespace fcrpool
