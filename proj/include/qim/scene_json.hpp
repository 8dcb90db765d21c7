#pragma once

#include <filesystem>

#include "json.hpp"
#include "qim/model.hpp"

namespace qim {

/// Scene files are JSON objects keyed by the SceneConfig field names:
///
///   width, height, pair_rate, pump_sigma_px,
///   geometry { center: [cx2, cy2] (half-pixel units), sigma_px },
///   object_map, thermal_map, thermal_scale, thermal_bunching,
///   probe_loss_eta, detector { qe_probe, qe_ref, dark_event_prob }, seed
///
/// Omitted keys take default_scene(width, height) values; unknown keys are
/// rejected. A map is a number (uniform), a PGM path (relative to the scene
/// file), a row-major array of rows, or a shape descriptor
///   { "background": b, "layers": [ { "shape": ..., "value": v, ... } ] }
/// or a single layer { "shape": ..., "value": v, "background": b }.
nlohmann::json scene_to_json(const SceneConfig& scene);

/// Throws ValidationError on unknown keys, wrong types or invariant
/// violations (the result is validated).
SceneConfig scene_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

Map2D map_from_json(const nlohmann::json& j, int width, int height, const std::filesystem::path& base_dir = {});
nlohmann::json map_to_json(const Map2D& map);

SceneConfig load_scene(const std::filesystem::path& path);
void save_scene(const SceneConfig& scene, const std::filesystem::path& path);

/// Parses a JSON document, mapping parse failures to FormatError.
nlohmann::json load_json(const std::filesystem::path& path);

} // namespace qim
