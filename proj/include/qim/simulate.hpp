#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "qim/frame.hpp"
#include "qim/model.hpp"
#include "qim/rng.hpp"

namespace qim {

/// One SPDC pair after transport to the sensor. `probe` is absent when the
/// jittered probe position falls off the sensor.
struct PairSample {
    Pixel ref;
    std::optional<Pixel> probe;
    bool detected_ref = false;
    bool detected_probe = false;
};

struct StackPair {
    FrameStack probe;
    FrameStack ref;
};

/// Per-frame stream for frame `index` of a scene seeded with `seed`.
inline Rng frame_rng(std::uint64_t seed, std::uint64_t index) noexcept {
    return Rng(seed, StreamDomain::frame, index);
}

/// Monte Carlo sampler for a validated scene. Construction precomputes the
/// per-pixel detection and thermal tables; sampling is const and safe to
/// call from several threads with separate Rng instances.
class FrameGenerator {
public:
    /// Throws ValidationError if the scene is invalid.
    explicit FrameGenerator(SceneConfig scene);

    const SceneConfig& scene() const noexcept { return scene_; }

    /// Reference position from the pump envelope (resampled until on the
    /// sensor, at most 1000 attempts), probe at its point reflection through
    /// the anticorrelation center plus rounded Gaussian jitter, then
    /// Bernoulli survival through transmission, loss and detection.
    PairSample sample_pair(Rng& rng) const;

    /// Calls emit(x, y) for each thermal event on the probe frame.
    template <class Emit>
    void sample_thermal(Rng& rng, Emit&& emit) const;

    /// Calls emit(x, y) for each dark event of one frame.
    template <class Emit>
    void sample_dark(Rng& rng, Emit&& emit) const;

    /// Writes one probe/reference frame pair into zeroed bit buffers.
    void generate_into(Rng& rng, std::span<Word> probe, std::span<Word> ref) const;

    std::pair<Frame, Frame> generate(Rng& rng) const;

    /// Frames [first, first + count) of the scene's deterministic sequence.
    StackPair generate_range(std::uint64_t first, std::size_t count, unsigned workers = 1) const;

private:
    template <class Emit>
    void sparse_bernoulli(Rng& rng, double p_max, const std::vector<double>* p, Emit&& emit) const;

    SceneConfig scene_;
    std::size_t wpr_ = 0;
    std::vector<double> probe_survival_;  // t(x) * eta * qe_probe
    std::vector<double> thermal_mean_;    // thermal_scale * nbar(x)
    std::vector<double> thermal_prob_;    // m / (1 + m), unbunched
    double thermal_mean_max_ = 0.0;
    double thermal_prob_max_ = 0.0;
};

PairSample sample_pair(const CorrelationGeometry& geometry, double pump_sigma_px, const SceneConfig& scene,
                       Rng& rng);

/// Each pixel fires with probability m / (1 + m), m = thermal_scale * nbar(x):
/// a thresholded single-mode Bose-Einstein field. With `bunching` a common
/// exponential intensity factor multiplies m for the whole frame.
std::vector<Pixel> sample_thermal_events(const Map2D& thermal_map, double thermal_scale, Rng& rng,
                                         bool bunching = false);

std::vector<Pixel> sample_dark_events(const DetectorModel& detector, int width, int height, Rng& rng);

std::pair<Frame, Frame> generate_frame(const SceneConfig& scene, Rng& rng);

/// Frame i uses frame_rng(scene.seed, i), so the output is bit-identical for
/// any worker count. workers = 0 uses the hardware concurrency.
StackPair generate_stack(const SceneConfig& scene, std::size_t n_frames, unsigned workers = 0);

/// Streams the same frames as generate_stack in chunks of at most
/// `chunk_frames`, calling sink(chunk, first_frame_index) in order.
void generate_chunks(const SceneConfig& scene, std::uint64_t n_frames, std::size_t chunk_frames,
                     unsigned workers, const std::function<void(const StackPair&, std::uint64_t)>& sink);

// ---------------------------------------------------------------------------

template <class Emit>
void FrameGenerator::sparse_bernoulli(Rng& rng, double p_max, const std::vector<double>* p,
                                      Emit&& emit) const {
    if (!(p_max > 0.0)) return;
    const std::uint64_t n = static_cast<std::uint64_t>(scene_.width) * static_cast<std::uint64_t>(scene_.height);
    std::uint64_t idx = 0;
    for (;;) {
        const std::uint64_t skip = rng.geometric_skip(p_max);
        if (skip >= n - idx) return;
        idx += skip;
        // Thinning against the per-pixel probability.
        if (p == nullptr || (*p)[idx] >= p_max || rng.uniform() * p_max < (*p)[idx]) {
            emit(static_cast<int>(idx % static_cast<std::uint64_t>(scene_.width)),
                 static_cast<int>(idx / static_cast<std::uint64_t>(scene_.width)));
        }
        ++idx;
        if (idx >= n) return;
    }
}

template <class Emit>
void FrameGenerator::sample_thermal(Rng& rng, Emit&& emit) const {
    if (!(thermal_mean_max_ > 0.0)) return;
    if (!scene_.thermal_bunching) {
        sparse_bernoulli(rng, thermal_prob_max_, &thermal_prob_, emit);
        return;
    }
    const double gain = rng.exponential();
    const double m_max = thermal_mean_max_ * gain;
    const double p_max = m_max / (1.0 + m_max);
    if (!(p_max > 0.0)) return;
    const std::uint64_t n = thermal_mean_.size();
    std::uint64_t idx = 0;
    for (;;) {
        const std::uint64_t skip = rng.geometric_skip(p_max);
        if (skip >= n - idx) return;
        idx += skip;
        const double m = thermal_mean_[idx] * gain;
        const double p = m / (1.0 + m);
        if (p >= p_max || rng.uniform() * p_max < p) {
            emit(static_cast<int>(idx % static_cast<std::uint64_t>(scene_.width)),
                 static_cast<int>(idx / static_cast<std::uint64_t>(scene_.width)));
        }
        ++idx;
        if (idx >= n) return;
    }
}

template <class Emit>
void FrameGenerator::sample_dark(Rng& rng, Emit&& emit) const {
    sparse_bernoulli(rng, scene_.detector.dark_event_prob, nullptr, emit);
}

} // namespace qim
