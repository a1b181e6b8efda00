#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcrpool/geometry.hpp"
#include "fcrpool/model.hpp"

namespace fcrpool {

// ---------------------------------------------------------------------------
// Connection point CSV: header `id,x,y`, coordinates in meters.

std::vector<ConnectionPoint> load_points(const std::filesystem::path& path);
std::vector<ConnectionPoint> parse_points(std::istream& in);
void write_points(std::ostream& out, std::span<const ConnectionPoint> points);

// ---------------------------------------------------------------------------
// Synthetic neighborhoods.

enum class SyntheticKind { kUniformDisk, kClusteredGaussian, kGridStreet };

std::string_view to_string(SyntheticKind kind);
SyntheticKind synthetic_kind_from_string(std::string_view name);

/// All kinds live in the square [origin, origin + extent]^2.
///  UniformDisk:       uniform in a disk of radius density_param at the square's center.
///  ClusteredGaussian: `clusters` centers uniform in the square, isotropic
///                     normal offsets with sigma = density_param. clusters = 0
///                     picks max(1, n_points / 50).
///  GridStreet:        lattice with pitch density_param starting at origin,
///                     row-major, +-1 m jitter.
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kUniformDisk;
  std::size_t n_points = 1;
  double extent = 1000.0;
  double density_param = 100.0;
  std::uint64_t seed = 0;
  std::size_t clusters = 0;
  Point2 origin{0.0, 0.0};
  AssetId first_id = 0;

  void validate() const;
};

std::vector<ConnectionPoint> generate_points(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Experiments.

struct ExperimentSpec {
  std::string points_csv;                  // used when non-empty
  std::vector<SyntheticSpec> synthetic;    // layered otherwise; ids must not collide
  std::vector<double> participation_rates{1.0};
  std::size_t trials = 1;
  double fcr_price = 0.8;
  std::size_t horizon = 24;
  double radius = 100.0;
  Caps caps;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<ConnectionPoint> resolve_points(const ExperimentSpec& spec);

/// Participants drawn uniformly without replacement, costs uniform on [0, 1)
/// per (asset, step), circle family rebuilt over the participants.
Scenario build_scenario(const ExperimentSpec& spec, double rate, std::size_t trial);
Scenario build_scenario(std::span<const ConnectionPoint> pool, const ExperimentSpec& spec,
                        double rate, std::size_t trial);

/// Content hash of everything that defines an instance.
std::uint64_t scenario_hash(const Scenario& s);

}  // namespace fcrpool
