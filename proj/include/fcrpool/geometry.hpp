#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace fcrpool {

using AssetId = std::int64_t;

/// Absolute tolerance in meters applied to every "distance <= bound" test.
inline constexpr double kGeometryTolerance = 1e-9;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(Point2 a, Point2 b);

/// A low-voltage connection point: asset id plus planar position in meters.
struct ConnectionPoint {
  AssetId id = 0;
  double x = 0.0;
  double y = 0.0;

  Point2 position() const { return {x, y}; }
  friend bool operator==(const ConnectionPoint&, const ConnectionPoint&) = default;
};

struct Circle {
  Point2 center;
  double radius = 0.0;
};

/// One maximal set of assets that fits inside a circle of the family radius,
/// together with a circle center that witnesses it.
struct CircleSet {
  std::vector<AssetId> members;  // sorted ascending
  Point2 center;
  double radius = 0.0;
};

/// All maximal circle sets for a point set and radius. Sets are ordered
/// lexicographically by their member ids.
class CircleFamily {
 public:
  CircleFamily() = default;
  CircleFamily(double radius, std::vector<CircleSet> sets);

  double radius() const noexcept { return radius_; }
  const std::vector<CircleSet>& sets() const noexcept { return sets_; }
  std::size_t size() const noexcept { return sets_.size(); }

  /// Indices into sets() of the circles containing `id` (empty if unknown).
  std::span<const std::size_t> sets_of(AssetId id) const;
  const std::map<AssetId, std::vector<std::size_t>>& per_asset_index() const noexcept {
    return per_asset_;
  }

  std::size_t max_set_size() const;
  std::size_t count_larger_than(std::size_t n) const;

  /// Member-id lists only, for comparisons that ignore witnessing centers.
  std::vector<std::vector<AssetId>> member_sets() const;

 private:
  double radius_ = 0.0;
  std::vector<CircleSet> sets_;
  std::map<AssetId, std::vector<std::size_t>> per_asset_;
};

/// Centers of the two radius-r circles through p and q. The first center is
/// offset from the midpoint along (qy-py, px-qx)/|pq| and the second along
/// its negation; at |pq| == 2r both are the midpoint.
/// Throws kDegeneratePair for coincident points and kTooFarApart beyond 2r.
std::pair<Point2, Point2> two_circle_centers(const ConnectionPoint& p,
                                             const ConnectionPoint& q, double r);

/// Ids of all other points within distance d of point `id`, ascending.
std::vector<AssetId> neighbors_within(std::span<const ConnectionPoint> points, AssetId id,
                                      double d);

/// Exact minimal enclosing circle (randomized incremental, fixed shuffle).
Circle smallest_enclosing_circle(std::span<const Point2> points);

/// Builds the complete family of maximal radius-r circle sets. `workers`
/// controls the per-asset fan-out; the result does not depend on it.
CircleFamily build_circle_family(std::span<const ConnectionPoint> points, double r,
                                 unsigned workers = 1);

/// Uniform bucket grid for fixed-radius neighbor queries.
class NeighborGrid {
 public:
  NeighborGrid(std::span<const ConnectionPoint> points, double cell_size);

  /// Indices (into the constructor's span) of points within d of `center`,
  /// ascending by index. d must not exceed the cell size.
  std::vector<std::size_t> query(Point2 center, double d) const;

 private:
  struct CellKey {
    std::int64_t cx;
    std::int64_t cy;
    friend auto operator<=>(const CellKey&, const CellKey&) = default;
  };
  CellKey key_of(Point2 p) const;

  std::span<const ConnectionPoint> points_;
  double cell_;
  std::map<CellKey, std::vector<std::size_t>> cells_;
};

}  // namespace fcrpool
