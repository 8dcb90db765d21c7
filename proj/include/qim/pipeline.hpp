#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qim/coincidence.hpp"
#include "qim/image_io.hpp"
#include "qim/metrics.hpp"
#include "qim/model.hpp"
#include "qim/report.hpp"

namespace qim {

/// Contents of a rois.json file:
///   { "center": [cx2, cy2],
///     "rois": [ { "label": "bright", "rect": [x0, y0, w, h] },
///               { "label": "mask", "pixels": [[x, y], ...] }, ... ],
///     "cuts": { "rows": [first, last], "cols": [first, last] } }   // optional
/// Labels used by the analysis: bright, dark (contrast) and object, mask
/// (noise rejection). The center is in half-pixel units.
struct RoiSet {
    CorrelationGeometry geometry;
    std::map<std::string, Roi> rois;
    std::optional<IndexRange> cut_rows;
    std::optional<IndexRange> cut_cols;
    nlohmann::json source = nlohmann::json::object();

    const Roi* find(const std::string& label) const;
};

/// Throws ValidationError on schema errors or ROIs outside the image.
RoiSet rois_from_json(const nlohmann::json& j, int width, int height);
RoiSet load_rois(const std::filesystem::path& path, int width, int height);
nlohmann::json rois_to_json(const RoiSet& rois);

struct AnalysisOutputs {
    AnalysisReport report;
    CountImage classical;
    CountImage and_image;
    RealImage baseline;
    CutProfiles classical_cuts;
    CutProfiles and_cuts;
    IndexRange cut_rows;
    IndexRange cut_cols;
};

/// Contrasts, advantage, noise rejection, totals and cut profiles from a
/// filled accumulator. Missing ROI pairs leave the corresponding report
/// fields empty. `scene` (optional) adds oracle predictions to metadata.
AnalysisOutputs analyze(const CoincidenceAccumulator& acc, const RoiSet& rois,
                        const SceneConfig* scene = nullptr);

/// Writes classical/and/baseline images (PGM + PNG), report.json and
/// cuts.csv into `dir`.
void write_analysis(const AnalysisOutputs& out, const std::filesystem::path& dir,
                    Normalization normalization = Normalization::linear);

/// Accumulates a pair of QIFS files in chunks.
CoincidenceAccumulator accumulate_files(const std::filesystem::path& probe, const std::filesystem::path& ref,
                                        const CorrelationGeometry& geometry, CoincidenceOptions options,
                                        unsigned workers);

/// Simulates a scene in chunks straight into an accumulator.
CoincidenceAccumulator accumulate_scene(const SceneConfig& scene, std::uint64_t n_frames,
                                        const CorrelationGeometry& geometry, CoincidenceOptions options,
                                        unsigned workers);

} // namespace qim
