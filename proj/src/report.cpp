#include "qim/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "qim/error.hpp"
#include "qim/scene_json.hpp"

namespace qim {

namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

} // namespace

json report_to_json(const AnalysisReport& r) {
    json j;
    j["v_classical"] = optional_number(r.v_classical);
    j["v_quantum"] = optional_number(r.v_quantum);
    j["advantage"] = optional_number(r.advantage);
    if (r.noise_rejection) {
        const NoiseRejection& n = *r.noise_rejection;
        j["noise_rejection"] = n.infinite ? json("inf") : json(n.value);
        j["noise_rejection_detail"] = {{"classical_object_mean", n.classical_object_mean},
                                       {"classical_mask_mean", n.classical_mask_mean},
                                       {"and_object_mean", n.and_object_mean},
                                       {"and_mask_mean", n.and_mask_mean}};
    } else {
        j["noise_rejection"] = nullptr;
    }
    j["totals"] = r.totals;
    j["config"] = r.config;
    j["metadata"] = r.metadata;
    j["software_version"] = r.software_version;
    return j;
}

AnalysisReport report_from_json(const json& j) {
    AnalysisReport r;
    try {
        r.v_classical = read_optional(j, "v_classical");
        r.v_quantum = read_optional(j, "v_quantum");
        r.advantage = read_optional(j, "advantage");
        if (j.contains("noise_rejection") && !j.at("noise_rejection").is_null()) {
            NoiseRejection n;
            const json& v = j.at("noise_rejection");
            if (v.is_string()) {
                if (v.get<std::string>() != "inf") throw ValidationError("noise_rejection: unknown sentinel");
                n.infinite = true;
                n.value = std::numeric_limits<double>::infinity();
            } else {
                n.value = v.get<double>();
            }
            if (j.contains("noise_rejection_detail")) {
                const json& d = j.at("noise_rejection_detail");
                n.classical_object_mean = d.at("classical_object_mean").get<double>();
                n.classical_mask_mean = d.at("classical_mask_mean").get<double>();
                n.and_object_mean = d.at("and_object_mean").get<double>();
                n.and_mask_mean = d.at("and_mask_mean").get<double>();
            }
            r.noise_rejection = n;
        }
        r.totals = j.value("totals", json::object());
        r.config = j.value("config", json::object());
        r.metadata = j.value("metadata", json::object());
        r.software_version = j.value("software_version", std::string());
    } catch (const json::exception& e) {
        throw FormatError(FormatError::Kind::malformed_json, std::string("report: ") + e.what());
    }
    return r;
}

void write_text(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(FormatError::Kind::io, "cannot open " + path.string() + " for writing");
    out << contents;
    if (!out) throw FormatError(FormatError::Kind::io, "write failed on " + path.string());
}

void write_report(const AnalysisReport& report, const std::filesystem::path& path) {
    write_text(path, report_to_json(report).dump(2) + "\n");
}

AnalysisReport read_report(const std::filesystem::path& path) { return report_from_json(load_json(path)); }

void write_profiles(const std::vector<ProfileColumn>& columns, const std::filesystem::path& path) {
    std::ostringstream os;
    os << std::setprecision(17) << "index";
    std::size_t rows = 0;
    for (const auto& [name, values] : columns) {
        os << ',' << name;
        rows = std::max(rows, values.size());
    }
    os << '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        os << i;
        for (const auto& [name, values] : columns) {
            os << ',';
            if (i < values.size()) os << values[i];
        }
        os << '\n';
    }
    write_text(path, os.str());
}

} // namespace qim
