#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qim/frame.hpp"

namespace qim {

/// Dense per-pixel scalar map (object transmission, thermal photon number).
/// `source` optionally carries the JSON descriptor the map was built from so
/// configs can be echoed compactly; it is empty for inline maps.
struct Map2D {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    std::string source;

    Map2D() = default;
    Map2D(int w, int h, double fill = 0.0);

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    double max() const;

    /// Value equality; provenance is ignored.
    friend bool operator==(const Map2D& a, const Map2D& b) {
        return a.width == b.width && a.height == b.height && a.values == b.values;
    }
};

/// Rectangle or explicit pixel list with a label.
class Roi {
public:
    enum class Kind { rect, pixels };

    static Roi rect(std::string label, int x0, int y0, int w, int h);
    static Roi pixels(std::string label, std::vector<Pixel> pixels);

    Kind kind() const noexcept { return kind_; }
    const std::string& label() const noexcept { return label_; }
    /// {x0, y0, w, h}; meaningful for rect ROIs only.
    const std::vector<int>& rect_params() const noexcept { return rect_; }
    const std::vector<Pixel>& covered() const noexcept { return pixels_; }
    std::size_t size() const noexcept { return pixels_.size(); }

    /// Throws ValidationError if empty or any pixel is outside the host.
    void validate(int width, int height) const;
    bool disjoint_with(const Roi& other) const;

    friend bool operator==(const Roi&, const Roi&) = default;

private:
    Kind kind_ = Kind::pixels;
    std::string label_;
    std::vector<int> rect_;
    std::vector<Pixel> pixels_;
};

/// Anticorrelation center in half-pixel units plus the pair correlation
/// width. A probe event at pixel x is paired with a reference event at
/// (center - x) in half units, i.e. the point reflection through center/2.
struct CorrelationGeometry {
    int center_x2 = 48;
    int center_y2 = 48;
    double sigma_px = 4.0 / 13.0;

    double center_x() const noexcept { return center_x2 / 2.0; }
    double center_y() const noexcept { return center_y2 / 2.0; }

    friend bool operator==(const CorrelationGeometry&, const CorrelationGeometry&) = default;
};

struct DetectorModel {
    double qe_probe = 1.0;
    double qe_ref = 1.0;
    double dark_event_prob = 0.0016;

    friend bool operator==(const DetectorModel&, const DetectorModel&) = default;
};

struct SceneConfig {
    int width = 49;
    int height = 49;
    double pair_rate = 0.0;
    double pump_sigma_px = 1.0;
    CorrelationGeometry geometry;
    Map2D object_map;
    Map2D thermal_map;
    double thermal_scale = 1.0;
    /// Common per-frame gamma(shape 1) intensity factor on the thermal field.
    bool thermal_bunching = false;
    double probe_loss_eta = 1.0;
    DetectorModel detector;
    std::uint64_t seed = 1;

    friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

/// Baseline scene: 49x49 sensor, transparent object, no thermal light,
/// dark events at 0.0016 per pixel per frame and an SPDC rate of the same
/// order on the probe.
SceneConfig default_scene(int width = 49, int height = 49);

/// Returns `config` unchanged if every invariant holds, otherwise throws
/// ValidationError naming the first offending field.
const SceneConfig& validate_scene(const SceneConfig& config);

enum class ImageKind { classical, and_image, baseline };

std::string_view to_string(ImageKind kind);
ImageKind image_kind_from_string(std::string_view s);

/// Integer accumulation image. counts(x, y) <= n_frames.
struct CountImage {
    int width = 0;
    int height = 0;
    std::uint64_t n_frames = 0;
    ImageKind kind = ImageKind::classical;
    std::vector<std::uint64_t> counts;

    CountImage() = default;
    CountImage(int w, int h, ImageKind k, std::uint64_t frames = 0);

    std::uint64_t at(int x, int y) const { return counts[static_cast<std::size_t>(y) * width + x]; }
    std::uint64_t& at(int x, int y) { return counts[static_cast<std::size_t>(y) * width + x]; }
    double value(int x, int y) const { return static_cast<double>(at(x, y)); }
    std::uint64_t total() const;

    /// Adds a partial accumulation of the same shape and kind.
    CountImage& operator+=(const CountImage& other);

    friend bool operator==(const CountImage&, const CountImage&) = default;
};

/// Real-valued expected-count image (accidental baseline).
struct RealImage {
    int width = 0;
    int height = 0;
    std::uint64_t n_frames = 0;
    ImageKind kind = ImageKind::baseline;
    std::vector<double> values;

    RealImage() = default;
    RealImage(int w, int h, ImageKind k, std::uint64_t frames = 0);

    double value(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    double total() const;
};

/// Accidental-subtracted coincidence strength per displacement in
/// [-max_disp, max_disp]^2. Index (dx, dy) stored row-major from (-D, -D).
struct CorrelationMap {
    int max_disp = 0;
    std::uint64_t n_frames = 0;
    std::vector<double> values;

    explicit CorrelationMap(int d = 0, std::uint64_t frames = 0);

    int side() const noexcept { return 2 * max_disp + 1; }
    double at(int dx, int dy) const {
        return values[static_cast<std::size_t>(dy + max_disp) * side() + (dx + max_disp)];
    }
    double& at(int dx, int dy) {
        return values[static_cast<std::size_t>(dy + max_disp) * side() + (dx + max_disp)];
    }
};

} // namespace qim
