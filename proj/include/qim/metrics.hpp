#pragma once

#include <concepts>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qim/error.hpp"
#include "qim/model.hpp"

namespace qim {

template <class Image>
concept PixelImage = requires(const Image& img, int x, int y) {
    { img.width } -> std::convertible_to<int>;
    { img.height } -> std::convertible_to<int>;
    { img.value(x, y) } -> std::convertible_to<double>;
};

template <PixelImage Image>
double roi_mean(const Image& image, const Roi& roi) {
    roi.validate(image.width, image.height);
    double sum = 0.0;
    for (const Pixel& p : roi.covered()) sum += image.value(p.x, p.y);
    return sum / static_cast<double>(roi.size());
}

/// (I_max - I_min) / (I_max + I_min) from ROI means.
double michelson_contrast(double bright_mean, double dark_mean);

template <PixelImage Image>
double michelson_contrast(const Image& image, const Roi& bright, const Roi& dark) {
    if (!bright.disjoint_with(dark)) throw ValidationError("bright and dark ROIs overlap");
    return michelson_contrast(roi_mean(image, bright), roi_mean(image, dark));
}

double qi_advantage(double v_quantum, double v_classical);

/// Object-to-mask signal ratio of the AND image over that of the classical
/// image. `value` is +inf when the AND mask mean is zero; the ROI means are
/// kept so the result can be reported with its raw inputs.
struct NoiseRejection {
    double value = 0.0;
    bool infinite = false;
    double classical_object_mean = 0.0;
    double classical_mask_mean = 0.0;
    double and_object_mean = 0.0;
    double and_mask_mean = 0.0;
};

NoiseRejection noise_rejection_ratio(const CountImage& classical, const CountImage& and_image, const Roi& object_roi,
                                     const Roi& mask_roi);

struct IndexRange {
    int first = 0;
    int last = 0;  // inclusive

    int size() const noexcept { return last - first + 1; }
};

struct CutProfiles {
    /// Per-column mean over the selected rows (length = width).
    std::vector<double> row_profile;
    /// Per-row mean over the selected columns (length = height).
    std::vector<double> col_profile;
};

template <PixelImage Image>
CutProfiles cut_profiles(const Image& image, IndexRange rows, IndexRange cols);

enum class Strategy { classical, quantum, combined };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct BerEstimate {
    Strategy strategy = Strategy::classical;
    std::uint64_t errors = 0;
    std::uint64_t trials = 0;
    double ber = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    /// Present and absent oracle means coincide; decisions are coin flips.
    bool degenerate = false;
};

struct PresenceOracle {
    double classical_present = 0.0;
    double classical_absent = 0.0;
    double quantum_present = 0.0;
    double quantum_absent = 0.0;
};

struct PresenceOptions {
    std::uint64_t block_frames = 1;
    std::uint64_t trials = 1000;
    unsigned workers = 1;
};

/// Wilson score interval at 95%.
void wilson_interval(std::uint64_t successes, std::uint64_t n, double& low, double& high);

/// Expected ROI-summed classical and AND counts per M-frame block with the
/// object present (scene as given) and absent (object_map zeroed in the ROI).
PresenceOracle presence_oracle(const SceneConfig& scene, const Roi& object_roi, std::uint64_t block_frames);

/// Present/absent decision experiment. Each trial draws presence with prior
/// 1/2 from its own stream, simulates an M-frame block and applies, per
/// strategy, a threshold at the midpoint of the oracle means (classical,
/// quantum) or the sign of the Poisson log-likelihood ratio of both
/// statistics treated as independent (combined). Ties are broken by a fair
/// coin. Results are deterministic for a fixed seed and any worker count.
std::vector<BerEstimate> presence_ber(const SceneConfig& scene, const Roi& object_roi, const PresenceOptions& options,
                                      const std::vector<Strategy>& strategies);

// ---------------------------------------------------------------------------

template <PixelImage Image>
CutProfiles cut_profiles(const Image& image, IndexRange rows, IndexRange cols) {
    if (rows.size() < 1 || cols.size() < 1) throw ValidationError("cut range is empty");
    if (rows.first < 0 || rows.last >= image.height || cols.first < 0 || cols.last >= image.width) {
        throw ValidationError("cut range outside image");
    }
    CutProfiles out;
    out.row_profile.assign(static_cast<std::size_t>(image.width), 0.0);
    out.col_profile.assign(static_cast<std::size_t>(image.height), 0.0);
    for (int x = 0; x < image.width; ++x) {
        double s = 0.0;
        for (int y = rows.first; y <= rows.last; ++y) s += image.value(x, y);
        out.row_profile[static_cast<std::size_t>(x)] = s / rows.size();
    }
    for (int y = 0; y < image.height; ++y) {
        double s = 0.0;
        for (int x = cols.first; x <= cols.last; ++x) s += image.value(x, y);
        out.col_profile[static_cast<std::size_t>(y)] = s / cols.size();
    }
    return out;
}

} // namespace qim
