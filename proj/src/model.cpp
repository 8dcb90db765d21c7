#include "qim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "qim/error.hpp"

namespace qim {

namespace {

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void require_unit(double v, const char* field) {
    if (!in_unit(v)) throw ValidationError(std::string(field) + " out of [0,1]");
}

void require_nonneg(double v, const char* field) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError(std::string(field) + " must be finite and >= 0");
}

void require_map_dims(const Map2D& m, int width, int height, const char* field) {
    if (m.width != width || m.height != height ||
        m.values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ValidationError(std::string(field) + " dimensions " + std::to_string(m.width) + "x" +
                              std::to_string(m.height) + " do not match scene " + std::to_string(width) +
                              "x" + std::to_string(height));
    }
}

} // namespace

Map2D::Map2D(int w, int h, double fill)
    : width(w), height(h), values(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0), fill) {}

double Map2D::max() const {
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

Roi Roi::rect(std::string label, int x0, int y0, int w, int h) {
    Roi r;
    r.kind_ = Kind::rect;
    r.label_ = std::move(label);
    r.rect_ = {x0, y0, w, h};
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) r.pixels_.push_back({x, y});
    return r;
}

Roi Roi::pixels(std::string label, std::vector<Pixel> pixels) {
    Roi r;
    r.kind_ = Kind::pixels;
    r.label_ = std::move(label);
    std::sort(pixels.begin(), pixels.end(), [](const Pixel& a, const Pixel& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
    r.pixels_ = std::move(pixels);
    return r;
}

void Roi::validate(int width, int height) const {
    if (pixels_.empty()) throw ValidationError("roi '" + label_ + "' is empty");
    for (const Pixel& p : pixels_) {
        if (p.x < 0 || p.x >= width || p.y < 0 || p.y >= height) {
            throw ValidationError("roi '" + label_ + "' pixel (" + std::to_string(p.x) + ", " +
                                  std::to_string(p.y) + ") outside " + std::to_string(width) + "x" +
                                  std::to_string(height) + " image");
        }
    }
}

bool Roi::disjoint_with(const Roi& other) const {
    std::set<Pixel> mine(pixels_.begin(), pixels_.end());
    return std::none_of(other.pixels_.begin(), other.pixels_.end(),
                        [&](const Pixel& p) { return mine.count(p) != 0; });
}

SceneConfig default_scene(int width, int height) {
    SceneConfig s;
    s.width = width;
    s.height = height;
    s.pump_sigma_px = 0.5 * std::max(width, height);
    // Every pair lands on the sensor, so this gives a mean SPDC occupancy of
    // 0.0016 per pixel per frame, matching the dark-event rate.
    s.pair_rate = 0.0016 * width * height;
    s.geometry.center_x2 = width - 1;
    s.geometry.center_y2 = height - 1;
    s.geometry.sigma_px = 4.0 / 13.0;
    s.object_map = Map2D(width, height, 1.0);
    s.thermal_map = Map2D(width, height, 0.0);
    return s;
}

const SceneConfig& validate_scene(const SceneConfig& c) {
    if (c.width < 1 || c.width > 65535) throw ValidationError("width must be in [1, 65535]");
    if (c.height < 1 || c.height > 65535) throw ValidationError("height must be in [1, 65535]");
    require_nonneg(c.pair_rate, "pair_rate");
    if (!std::isfinite(c.pump_sigma_px) || c.pump_sigma_px <= 0.0)
        throw ValidationError("pump_sigma_px must be finite and > 0");
    require_nonneg(c.geometry.sigma_px, "geometry.sigma_px");
    if (c.geometry.center_x2 < 0 || c.geometry.center_x2 > 2 * (c.width - 1) || c.geometry.center_y2 < 0 ||
        c.geometry.center_y2 > 2 * (c.height - 1)) {
        throw ValidationError("geometry.center outside [0, width-1] x [0, height-1]");
    }
    require_map_dims(c.object_map, c.width, c.height, "object_map");
    for (double v : c.object_map.values) require_unit(v, "object_map");
    require_map_dims(c.thermal_map, c.width, c.height, "thermal_map");
    for (double v : c.thermal_map.values) require_nonneg(v, "thermal_map");
    require_nonneg(c.thermal_scale, "thermal_scale");
    require_unit(c.probe_loss_eta, "probe_loss_eta");
    require_unit(c.detector.qe_probe, "detector.qe_probe");
    require_unit(c.detector.qe_ref, "detector.qe_ref");
    require_unit(c.detector.dark_event_prob, "detector.dark_event_prob");
    return c;
}

std::string_view to_string(ImageKind kind) {
    switch (kind) {
    case ImageKind::classical: return "classical";
    case ImageKind::and_image: return "and";
    case ImageKind::baseline: return "baseline";
    }
    return "unknown";
}

ImageKind image_kind_from_string(std::string_view s) {
    if (s == "classical") return ImageKind::classical;
    if (s == "and") return ImageKind::and_image;
    if (s == "baseline") return ImageKind::baseline;
    throw ValidationError("unknown image kind '" + std::string(s) + "'");
}

CountImage::CountImage(int w, int h, ImageKind k, std::uint64_t frames)
    : width(w), height(h), n_frames(frames), kind(k),
      counts(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

std::uint64_t CountImage::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

CountImage& CountImage::operator+=(const CountImage& other) {
    if (other.width != width || other.height != height || other.kind != kind) {
        throw AnalysisError("cannot merge count images of different shape or kind");
    }
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    n_frames += other.n_frames;
    return *this;
}

RealImage::RealImage(int w, int h, ImageKind k, std::uint64_t frames)
    : width(w), height(h), n_frames(frames), kind(k),
      values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0) {}

double RealImage::total() const { return std::accumulate(values.begin(), values.end(), 0.0); }

CorrelationMap::CorrelationMap(int d, std::uint64_t frames)
    : max_disp(d), n_frames(frames), values(static_cast<std::size_t>(2 * d + 1) * (2 * d + 1), 0.0) {}

} // namespace qim
