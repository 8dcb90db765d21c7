#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qim/metrics.hpp"

namespace qim {

inline constexpr const char* kSoftwareVersion = "0.1.0";

/// Contrast, advantage and rejection figures for one analyzed run.
/// Undefined quantities are empty optionals and serialize as null; an
/// unbounded noise rejection serializes as the string "inf" with its ROI
/// means alongside.
struct AnalysisReport {
    std::optional<double> v_classical;
    std::optional<double> v_quantum;
    std::optional<double> advantage;
    std::optional<NoiseRejection> noise_rejection;
    nlohmann::json totals = nlohmann::json::object();
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json metadata = nlohmann::json::object();
    std::string software_version = kSoftwareVersion;
};

nlohmann::json report_to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const nlohmann::json& j);

void write_report(const AnalysisReport& report, const std::filesystem::path& path);
AnalysisReport read_report(const std::filesystem::path& path);

using ProfileColumn = std::pair<std::string, std::vector<double>>;

/// CSV with header "index,<names...>" and one row per pixel index up to the
/// longest column; shorter columns leave empty cells.
void write_profiles(const std::vector<ProfileColumn>& columns, const std::filesystem::path& path);

/// Writes `contents` to `path`, throwing FormatError on failure.
void write_text(const std::filesystem::path& path, const std::string& contents);

} // namespace qim
