#include "qim/scene_json.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <string>

#include "qim/error.hpp"
#include "qim/image_io.hpp"
#include "qim/shapes.hpp"

namespace qim {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
        if (!ok.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
T get_field(const json& j, const char* key, const T& fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(where + key + ": wrong type");
    }
}

double num(const json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ValidationError(where + key + ": expected a number");
    return j.at(key).get<double>();
}

void paint_layer(Map2D& map, const json& layer) {
    if (!layer.is_object() || !layer.contains("shape") || !layer.at("shape").is_string()) {
        throw ValidationError("map layer: expected an object with a \"shape\" string");
    }
    const std::string shape = layer.at("shape").get<std::string>();
    const std::string where = "map layer '" + shape + "': ";
    const double value = num(layer, "value", 1.0, where);
    if (shape == "rect") {
        reject_unknown(layer, {"shape", "value", "background", "x0", "y0", "w", "h"}, "rect");
        shapes::paint_rect(map, get_field<int>(layer, "x0", 0, where), get_field<int>(layer, "y0", 0, where),
                           get_field<int>(layer, "w", map.width, where), get_field<int>(layer, "h", map.height, where),
                           value);
    } else if (shape == "disk") {
        reject_unknown(layer, {"shape", "value", "background", "cx", "cy", "r"}, "disk");
        shapes::paint_disk(map, num(layer, "cx", (map.width - 1) / 2.0, where),
                           num(layer, "cy", (map.height - 1) / 2.0, where), num(layer, "r", 1.0, where), value);
    } else if (shape == "ellipse") {
        reject_unknown(layer, {"shape", "value", "background", "cx", "cy", "rx", "ry"}, "ellipse");
        shapes::paint_ellipse(map, num(layer, "cx", (map.width - 1) / 2.0, where),
                              num(layer, "cy", (map.height - 1) / 2.0, where), num(layer, "rx", 1.0, where),
                              num(layer, "ry", 1.0, where), value);
    } else if (shape == "bars") {
        reject_unknown(layer, {"shape", "value", "background", "orientation", "period", "bar_width", "offset"}, "bars");
        const std::string orient = get_field<std::string>(layer, "orientation", "vertical", where);
        if (orient != "vertical" && orient != "horizontal") {
            throw ValidationError(where + "orientation must be \"vertical\" or \"horizontal\"");
        }
        shapes::paint_bars(map, orient == "vertical", get_field<int>(layer, "period", 6, where),
                           get_field<int>(layer, "bar_width", 2, where), get_field<int>(layer, "offset", 0, where),
                           value);
    } else if (shape == "text") {
        reject_unknown(layer, {"shape", "value", "background", "text", "x0", "y0", "scale"}, "text");
        const std::string text = get_field<std::string>(layer, "text", "", where);
        const int scale = get_field<int>(layer, "scale", 1, where);
        shapes::paint_text(map, text, get_field<int>(layer, "x0", (map.width - shapes::text_width(text, scale)) / 2, where),
                           get_field<int>(layer, "y0", (map.height - 7 * scale) / 2, where), scale, value);
    } else if (shape == "bird") {
        reject_unknown(layer, {"shape", "value", "background", "cx", "cy", "size"}, "bird");
        shapes::paint_bird(map, num(layer, "cx", (map.width - 1) / 2.0, where),
                           num(layer, "cy", (map.height - 1) / 2.0, where), num(layer, "size", 8.0, where), value);
    } else {
        throw ValidationError("map layer: unknown shape '" + shape + "'");
    }
}

} // namespace

Map2D map_from_json(const json& j, int width, int height, const std::filesystem::path& base_dir) {
    if (j.is_number()) {
        Map2D m(width, height, j.get<double>());
        m.source = j.dump();
        return m;
    }
    if (j.is_string()) {
        std::filesystem::path p = j.get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        p = std::filesystem::absolute(p).lexically_normal();
        Map2D m = read_map(p);
        m.source = json(p.string()).dump();
        return m;
    }
    if (j.is_array()) {
        Map2D m(width, height);
        m.height = static_cast<int>(j.size());
        m.width = j.empty() ? 0 : static_cast<int>(j.front().size());
        m.values.clear();
        for (const auto& row : j) {
            if (!row.is_array() || static_cast<int>(row.size()) != m.width) {
                throw ValidationError("inline map rows must be arrays of equal length");
            }
            for (const auto& v : row) {
                if (!v.is_number()) throw ValidationError("inline map values must be numbers");
                m.values.push_back(v.get<double>());
            }
        }
        return m;
    }
    if (j.is_object()) {
        Map2D m(width, height, num(j, "background", 0.0, "map: "));
        if (j.contains("layers")) {
            reject_unknown(j, {"background", "layers"}, "map");
            if (!j.at("layers").is_array()) throw ValidationError("map: \"layers\" must be an array");
            for (const auto& layer : j.at("layers")) paint_layer(m, layer);
        } else {
            paint_layer(m, j);
        }
        m.source = j.dump();
        return m;
    }
    throw ValidationError("map: expected a number, path, array or shape descriptor");
}

json map_to_json(const Map2D& map) {
    if (!map.source.empty()) {
        // Only echo the descriptor if it still reproduces the values.
        try {
            const json src = json::parse(map.source);
            if (map_from_json(src, map.width, map.height) == map) return src;
        } catch (const std::exception&) {
        }
    }
    json rows = json::array();
    for (int y = 0; y < map.height; ++y) {
        json row = json::array();
        for (int x = 0; x < map.width; ++x) row.push_back(map.at(x, y));
        rows.push_back(std::move(row));
    }
    return rows;
}

json scene_to_json(const SceneConfig& s) {
    return json{
        {"width", s.width},
        {"height", s.height},
        {"pair_rate", s.pair_rate},
        {"pump_sigma_px", s.pump_sigma_px},
        {"geometry", {{"center", {s.geometry.center_x2, s.geometry.center_y2}}, {"sigma_px", s.geometry.sigma_px}}},
        {"object_map", map_to_json(s.object_map)},
        {"thermal_map", map_to_json(s.thermal_map)},
        {"thermal_scale", s.thermal_scale},
        {"thermal_bunching", s.thermal_bunching},
        {"probe_loss_eta", s.probe_loss_eta},
        {"detector",
         {{"qe_probe", s.detector.qe_probe},
          {"qe_ref", s.detector.qe_ref},
          {"dark_event_prob", s.detector.dark_event_prob}}},
        {"seed", s.seed},
    };
}

SceneConfig scene_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ValidationError("scene: expected a JSON object");
    reject_unknown(j,
                   {"width", "height", "pair_rate", "pump_sigma_px", "geometry", "object_map", "thermal_map",
                    "thermal_scale", "thermal_bunching", "probe_loss_eta", "detector", "seed"},
                   "scene");
    const int width = get_field<int>(j, "width", 49, "");
    const int height = get_field<int>(j, "height", 49, "");
    if (width < 1 || height < 1) throw ValidationError("width/height must be >= 1");
    SceneConfig s = default_scene(width, height);
    s.pair_rate = num(j, "pair_rate", s.pair_rate, "");
    s.pump_sigma_px = num(j, "pump_sigma_px", s.pump_sigma_px, "");
    if (j.contains("geometry")) {
        const json& g = j.at("geometry");
        if (!g.is_object()) throw ValidationError("geometry: expected an object");
        reject_unknown(g, {"center", "sigma_px"}, "geometry");
        if (g.contains("center")) {
            const json& c = g.at("center");
            if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() || !c[1].is_number_integer()) {
                throw ValidationError("geometry.center: expected [cx2, cy2] integers in half-pixel units");
            }
            s.geometry.center_x2 = c[0].get<int>();
            s.geometry.center_y2 = c[1].get<int>();
        }
        s.geometry.sigma_px = num(g, "sigma_px", s.geometry.sigma_px, "geometry.");
    }
    if (j.contains("object_map")) s.object_map = map_from_json(j.at("object_map"), width, height, base_dir);
    if (j.contains("thermal_map")) s.thermal_map = map_from_json(j.at("thermal_map"), width, height, base_dir);
    s.thermal_scale = num(j, "thermal_scale", s.thermal_scale, "");
    s.thermal_bunching = get_field<bool>(j, "thermal_bunching", s.thermal_bunching, "");
    s.probe_loss_eta = num(j, "probe_loss_eta", s.probe_loss_eta, "");
    if (j.contains("detector")) {
        const json& d = j.at("detector");
        if (!d.is_object()) throw ValidationError("detector: expected an object");
        reject_unknown(d, {"qe_probe", "qe_ref", "dark_event_prob"}, "detector");
        s.detector.qe_probe = num(d, "qe_probe", s.detector.qe_probe, "detector.");
        s.detector.qe_ref = num(d, "qe_ref", s.detector.qe_ref, "detector.");
        s.detector.dark_event_prob = num(d, "dark_event_prob", s.detector.dark_event_prob, "detector.");
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !(j.at("seed").is_number_integer() && j.at("seed").get<long long>() >= 0)) {
            throw ValidationError("seed: expected an unsigned integer");
        }
        s.seed = j.at("seed").get<std::uint64_t>();
    }
    validate_scene(s);
    return s;
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(FormatError::Kind::malformed_json, path.string() + ": " + e.what());
    }
}

SceneConfig load_scene(const std::filesystem::path& path) {
    return scene_from_json(load_json(path), path.parent_path());
}

void save_scene(const SceneConfig& scene, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError(FormatError::Kind::io, "cannot write " + path.string());
    out << scene_to_json(scene).dump(2) << '\n';
}

} // namespace qim
