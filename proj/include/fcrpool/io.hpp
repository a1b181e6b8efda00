#pragma once

// JSON forms of the library's inputs and outputs.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fcrpool/admm.hpp"
#include "fcrpool/geometry.hpp"
#include "fcrpool/ingest.hpp"
#include "fcrpool/model.hpp"

namespace fcrpool::io {

using nlohmann::json;

/// {"radius": r, "sets": [{"members": [...], "center": [x, y], "radius": r_s}]}
json to_json(const CircleFamily& family);
CircleFamily family_from_json(const json& j);

json to_json(std::span<const ConnectionPoint> points);
std::vector<ConnectionPoint> points_from_json(const json& j);

/// Points, costs (rows in point order), price, caps and the circle family.
json to_json(const Scenario& s);
Scenario scenario_from_json(const json& j);

json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_from_json(const json& j);

json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_from_json(const json& j);

json to_json(const AdmmParams& params);

/// p and z as nested arrays plus p_F and objective.
json to_json(const Solution& sol);

json to_json(const FeasibilityReport& report);

/// Throws kParseError on unreadable or malformed files.
json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fcrpool::io
