#include "fcrpool/ingest.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "fcrpool/rng.hpp"
#include "fcrpool/sampling.hpp"

namespace fcrpool {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::kParseError, "line " + std::to_string(line) + ": " + what);
}

double normal(std::mt19937_64& rng) {
  // Box-Muller on (0, 1] x [0, 1); portable, unlike std::normal_distribution.
  const double u1 = 1.0 - uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void hash_in(std::uint64_t& h, std::uint64_t v) { h = mix64(h ^ v); }
void hash_in(std::uint64_t& h, double v) { hash_in(h, std::bit_cast<std::uint64_t>(v)); }

}  // namespace

std::vector<ConnectionPoint> parse_points(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<ConnectionPoint> out;
  std::unordered_set<AssetId> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto fields = split_commas(text);
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "id" || fields[1] != "x" || fields[2] != "y") {
        parse_error(line_no, "expected header 'id,x,y'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) parse_error(line_no, "expected 3 fields");
    ConnectionPoint p;
    if (!parse_number(fields[0], p.id)) parse_error(line_no, "bad id '" + std::string(fields[0]) + "'");
    if (!parse_number(fields[1], p.x) || !std::isfinite(p.x)) {
      parse_error(line_no, "bad x '" + std::string(fields[1]) + "'");
    }
    if (!parse_number(fields[2], p.y) || !std::isfinite(p.y)) {
      parse_error(line_no, "bad y '" + std::string(fields[2]) + "'");
    }
    if (!seen.insert(p.id).second) {
      throw Error(ErrorKind::kDuplicateId, "duplicate id " + std::to_string(p.id) + " on line " +
                                               std::to_string(line_no));
    }
    out.push_back(p);
  }
  if (!header_seen) parse_error(line_no == 0 ? 1 : line_no, "missing header 'id,x,y'");
  return out;
}

std::vector<ConnectionPoint> load_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kParseError, "cannot open " + path.string());
  return parse_points(in);
}

void write_points(std::ostream& out, std::span<const ConnectionPoint> points) {
  out << "id,x,y\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g\n", static_cast<long long>(p.id), p.x, p.y);
    out << buf;
  }
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kUniformDisk: return "uniform_disk";
    case SyntheticKind::kClusteredGaussian: return "clustered_gaussian";
    case SyntheticKind::kGridStreet: return "grid_street";
  }
  return "unknown";
}

SyntheticKind synthetic_kind_from_string(std::string_view name) {
  if (name == "uniform_disk") return SyntheticKind::kUniformDisk;
  if (name == "clustered_gaussian") return SyntheticKind::kClusteredGaussian;
  if (name == "grid_street") return SyntheticKind::kGridStreet;
  throw Error(ErrorKind::kInvalidArgument, "unknown synthetic kind '" + std::string(name) + "'");
}

void SyntheticSpec::validate() const {
  if (n_points < 1) throw Error(ErrorKind::kInvalidArgument, "n_points must be at least 1");
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    throw Error(ErrorKind::kInvalidArgument, "extent must be positive");
  }
  if (!(density_param > 0.0) || !std::isfinite(density_param)) {
    throw Error(ErrorKind::kInvalidArgument, "density_param must be positive");
  }
}

std::vector<ConnectionPoint> generate_points(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(derive_seed(spec.seed, "points"));
  std::vector<ConnectionPoint> out;
  out.reserve(spec.n_points);
  const double ox = spec.origin.x;
  const double oy = spec.origin.y;
  auto push = [&](double x, double y) {
    out.push_back({spec.first_id + static_cast<AssetId>(out.size()), x, y});
  };
  switch (spec.kind) {
    case SyntheticKind::kUniformDisk: {
      const double cx = ox + 0.5 * spec.extent;
      const double cy = oy + 0.5 * spec.extent;
      for (std::size_t k = 0; k < spec.n_points; ++k) {
        const double r = spec.density_param * std::sqrt(uniform_unit(rng));
        const double th = 2.0 * std::numbers::pi * uniform_unit(rng);
        push(cx + r * std::cos(th), cy + r * std::sin(th));
      }
      break;
    }
    case SyntheticKind::kClusteredGaussian: {
      const std::size_t nc =
          spec.clusters > 0 ? spec.clusters : std::max<std::size_t>(1, spec.n_points / 50);
      std::vector<Point2> centers;
      for (std::size_t c = 0; c < nc; ++c) {
        const double x = ox + spec.extent * uniform_unit(rng);
        const double y = oy + spec.extent * uniform_unit(rng);
        centers.push_back({x, y});
      }
      for (std::size_t k = 0; k < spec.n_points; ++k) {
        const Point2 c = centers[k % nc];
        const double dx = spec.density_param * normal(rng);
        const double dy = spec.density_param * normal(rng);
        push(c.x + dx, c.y + dy);
      }
      break;
    }
    case SyntheticKind::kGridStreet: {
      const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(spec.n_points))));
      for (std::size_t k = 0; k < spec.n_points; ++k) {
        const double jx = 2.0 * uniform_unit(rng) - 1.0;
        const double jy = 2.0 * uniform_unit(rng) - 1.0;
        push(ox + spec.density_param * static_cast<double>(k % cols) + jx,
             oy + spec.density_param * static_cast<double>(k / cols) + jy);
      }
      break;
    }
  }
  return out;
}

void ExperimentSpec::validate() const {
  if (points_csv.empty() && synthetic.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "experiment needs points_csv or synthetic points");
  }
  for (const auto& s : synthetic) s.validate();
  if (participation_rates.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "experiment needs at least one participation rate");
  }
  for (double r : participation_rates) {
    if (!(r > 0.0 && r <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument, "participation rates must be in (0, 1]");
    }
  }
  if (trials < 1) throw Error(ErrorKind::kInvalidArgument, "trials must be at least 1");
  if (horizon < 1) throw Error(ErrorKind::kInvalidArgument, "horizon must be at least 1");
  if (!(fcr_price >= 0.0) || !std::isfinite(fcr_price)) {
    throw Error(ErrorKind::kInvalidArgument, "fcr_price must be finite and non-negative");
  }
  if (!(radius > 0.0)) throw Error(ErrorKind::kInvalidArgument, "radius must be positive");
  if (!(caps.power_cap > 0.0) || caps.circle_cap < 0) {
    throw Error(ErrorKind::kInvalidArgument, "caps must be positive");
  }
}

std::vector<ConnectionPoint> resolve_points(const ExperimentSpec& spec) {
  spec.validate();
  if (!spec.points_csv.empty()) return load_points(spec.points_csv);
  std::vector<ConnectionPoint> all;
  std::unordered_set<AssetId> ids;
  for (const auto& layer : spec.synthetic) {
    for (const auto& p : generate_points(layer)) {
      if (!ids.insert(p.id).second) {
        throw Error(ErrorKind::kDuplicateId,
                    "synthetic layers reuse id " + std::to_string(p.id) + "; set first_id");
      }
      all.push_back(p);
    }
  }
  return all;
}

Scenario build_scenario(std::span<const ConnectionPoint> pool, const ExperimentSpec& spec,
                        double rate, std::size_t trial) {
  spec.validate();
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "participation rate must be in (0, 1]");
  }
  const std::size_t count = sample_count(pool.size(), rate);
  if (count == 0) throw Error(ErrorKind::kEmptySample, "participation rate selects no point");

  std::mt19937_64 pick(derive_seed(spec.seed, "participants", rate, trial));
  std::vector<ConnectionPoint> chosen;
  for (std::size_t idx : sample_without_replacement(pool.size(), count, pick)) {
    chosen.push_back(pool[idx]);
  }
  std::mt19937_64 draw(derive_seed(spec.seed, "costs", rate, trial));
  Matrix cost(chosen.size(), spec.horizon);
  for (double& c : cost.flat()) c = uniform_unit(draw);

  CircleFamily family = build_circle_family(chosen, spec.radius);
  return Scenario(std::move(chosen), std::move(family), std::move(cost), spec.fcr_price, spec.caps,
                  derive_seed(spec.seed, "scenario", rate, trial));
}

Scenario build_scenario(const ExperimentSpec& spec, double rate, std::size_t trial) {
  const auto pool = resolve_points(spec);
  return build_scenario(pool, spec, rate, trial);
}

std::uint64_t scenario_hash(const Scenario& s) {
  std::uint64_t h = hash_tag("scenario");
  hash_in(h, static_cast<std::uint64_t>(s.num_assets()));
  for (const auto& p : s.points()) {
    hash_in(h, static_cast<std::uint64_t>(p.id));
    hash_in(h, p.x);
    hash_in(h, p.y);
  }
  hash_in(h, static_cast<std::uint64_t>(s.horizon()));
  for (double c : s.cost().flat()) hash_in(h, c);
  hash_in(h, s.fcr_price());
  hash_in(h, s.power_cap());
  hash_in(h, static_cast<std::uint64_t>(s.circle_cap()));
  hash_in(h, s.family().radius());
  for (const auto& set : s.family().sets()) {
    hash_in(h, static_cast<std::uint64_t>(set.members.size()));
    for (AssetId id : set.members) hash_in(h, static_cast<std::uint64_t>(id));
  }
  return h;
}

}  // namespace fcrpool
