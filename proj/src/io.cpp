#include "fcrpool/io.hpp"

#include <fstream>
#include <sstream>

namespace fcrpool::io {
namespace {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorKind::kParseError, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
  return j.is_object() && j.contains(key) ? field<T>(j, key) : fallback;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t rows) {
  if (!j.is_array() || j.size() != rows) {
    throw Error(ErrorKind::kParseError, "cost matrix must have one row per point");
  }
  const std::size_t cols = rows == 0 ? 0 : j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw Error(ErrorKind::kParseError, "cost rows differ in length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw Error(ErrorKind::kParseError, "cost entry is not a number");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

}  // namespace

json to_json(const CircleFamily& family) {
  json sets = json::array();
  for (const auto& s : family.sets()) {
    sets.push_back({{"members", s.members},
                    {"center", {s.center.x, s.center.y}},
                    {"radius", s.radius}});
  }
  return {{"radius", family.radius()}, {"sets", sets}};
}

CircleFamily family_from_json(const json& j) {
  const double radius = field<double>(j, "radius");
  std::vector<CircleSet> sets;
  for (const auto& s : field<json>(j, "sets")) {
    CircleSet cs;
    cs.members = field<std::vector<AssetId>>(s, "members");
    const auto c = field_or<std::vector<double>>(s, "center", {0.0, 0.0});
    if (c.size() != 2) throw Error(ErrorKind::kParseError, "center must be [x, y]");
    cs.center = {c[0], c[1]};
    cs.radius = field_or<double>(s, "radius", 0.0);
    sets.push_back(std::move(cs));
  }
  return CircleFamily(radius, std::move(sets));
}

json to_json(std::span<const ConnectionPoint> points) {
  json out = json::array();
  for (const auto& p : points) out.push_back({{"id", p.id}, {"x", p.x}, {"y", p.y}});
  return out;
}

std::vector<ConnectionPoint> points_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorKind::kParseError, "points must be an array");
  std::vector<ConnectionPoint> out;
  for (const auto& p : j) {
    out.push_back({field<AssetId>(p, "id"), field<double>(p, "x"), field<double>(p, "y")});
  }
  return out;
}

json to_json(const Scenario& s) {
  return {{"fcr_price", s.fcr_price()},
          {"power_cap", s.power_cap()},
          {"circle_cap", s.circle_cap()},
          {"seed", s.rng_seed()},
          {"points", to_json(s.points())},
          {"cost", matrix_json(s.cost())},
          {"family", to_json(s.family())}};
}

Scenario scenario_from_json(const json& j) {
  auto points = points_from_json(field<json>(j, "points"));
  Matrix cost = matrix_from_json(field<json>(j, "cost"), points.size());
  Caps caps{field_or<double>(j, "power_cap", kDefaultPowerCap),
            field_or<int>(j, "circle_cap", kDefaultCircleCap)};
  return Scenario(std::move(points), family_from_json(field<json>(j, "family")), std::move(cost),
                  field<double>(j, "fcr_price"), caps, field_or<std::uint64_t>(j, "seed", 0));
}

json to_json(const SyntheticSpec& spec) {
  return {{"kind", std::string(to_string(spec.kind))},
          {"n_points", spec.n_points},
          {"extent", spec.extent},
          {"density_param", spec.density_param},
          {"seed", spec.seed},
          {"clusters", spec.clusters},
          {"origin", {spec.origin.x, spec.origin.y}},
          {"first_id", spec.first_id}};
}

SyntheticSpec synthetic_from_json(const json& j) {
  SyntheticSpec s;
  s.kind = synthetic_kind_from_string(field<std::string>(j, "kind"));
  s.n_points = field<std::size_t>(j, "n_points");
  s.extent = field_or<double>(j, "extent", s.extent);
  s.density_param = field_or<double>(j, "density_param", s.density_param);
  s.seed = field_or<std::uint64_t>(j, "seed", s.seed);
  s.clusters = field_or<std::size_t>(j, "clusters", s.clusters);
  const auto o = field_or<std::vector<double>>(j, "origin", {0.0, 0.0});
  if (o.size() != 2) throw Error(ErrorKind::kParseError, "origin must be [x, y]");
  s.origin = {o[0], o[1]};
  s.first_id = field_or<AssetId>(j, "first_id", s.first_id);
  return s;
}

json to_json(const ExperimentSpec& spec) {
  json layers = json::array();
  for (const auto& s : spec.synthetic) layers.push_back(to_json(s));
  json out = {{"participation_rates", spec.participation_rates},
              {"trials", spec.trials},
              {"fcr_price", spec.fcr_price},
              {"horizon", spec.horizon},
              {"radius", spec.radius},
              {"power_cap", spec.caps.power_cap},
              {"circle_cap", spec.caps.circle_cap},
              {"seed", spec.seed},
              {"cost_sampler", "uniform[0,1)"}};
  if (!spec.points_csv.empty()) out["points_csv"] = spec.points_csv;
  if (!spec.synthetic.empty()) out["synthetic"] = layers;
  return out;
}

ExperimentSpec experiment_from_json(const json& j) {
  ExperimentSpec s;
  s.points_csv = field_or<std::string>(j, "points_csv", "");
  if (j.contains("synthetic")) {
    const json& layers = j.at("synthetic");
    if (layers.is_array()) {
      for (const auto& l : layers) s.synthetic.push_back(synthetic_from_json(l));
    } else {
      s.synthetic.push_back(synthetic_from_json(layers));
    }
  }
  s.participation_rates = field_or<std::vector<double>>(j, "participation_rates", {1.0});
  s.trials = field_or<std::size_t>(j, "trials", s.trials);
  s.fcr_price = field_or<double>(j, "fcr_price", s.fcr_price);
  s.horizon = field_or<std::size_t>(j, "horizon", s.horizon);
  s.radius = field_or<double>(j, "radius", s.radius);
  s.caps.power_cap = field_or<double>(j, "power_cap", s.caps.power_cap);
  s.caps.circle_cap = field_or<int>(j, "circle_cap", s.caps.circle_cap);
  s.seed = field_or<std::uint64_t>(j, "seed", s.seed);
  s.validate();
  return s;
}

json to_json(const AdmmParams& p) {
  return {{"rho_c", p.rho_circle}, {"rho_f", p.rho_pool},   {"k_ip", p.k_ip},
          {"alpha", p.alpha},      {"max_iter", p.max_iter}, {"warm_start", p.warm_start}};
}

json to_json(const Solution& sol) {
  return {{"p_F", sol.p_F}, {"objective", sol.objective}, {"p", matrix_json(sol.p)},
          {"z", matrix_json(sol.z)}};
}

json to_json(const FeasibilityReport& report) {
  json v = json::array();
  for (const auto& x : report.violations) {
    v.push_back({{"kind", std::string(to_string(x.kind))},
                 {"asset", x.asset},
                 {"step", x.step},
                 {"circle", x.circle},
                 {"magnitude", x.magnitude}});
  }
  return {{"feasible", report.feasible()}, {"violations", v}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kParseError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParseError, path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kInvalidArgument, "cannot write " + path.string());
  out << text;
}

}  // namespace fcrpool::io
