#include "qim/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "qim/error.hpp"
#include "qim/parallel.hpp"

namespace qim {

namespace {

constexpr int kMaxPumpAttempts = 1000;

inline void set_bit(std::span<Word> words, std::size_t wpr, int x, int y) noexcept {
    words[static_cast<std::size_t>(y) * wpr + static_cast<std::size_t>(x) / kWordBits] |= Word{1}
                                                                                       << (x % kWordBits);
}

} // namespace

FrameGenerator::FrameGenerator(SceneConfig scene) : scene_(std::move(scene)) {
    validate_scene(scene_);
    wpr_ = words_per_row(scene_.width);
    const std::size_t n = static_cast<std::size_t>(scene_.width) * static_cast<std::size_t>(scene_.height);
    const double arm = scene_.probe_loss_eta * scene_.detector.qe_probe;
    probe_survival_.resize(n);
    thermal_mean_.resize(n);
    thermal_prob_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        probe_survival_[i] = scene_.object_map.values[i] * arm;
        const double m = scene_.thermal_scale * scene_.thermal_map.values[i];
        thermal_mean_[i] = m;
        thermal_prob_[i] = m / (1.0 + m);
    }
    thermal_mean_max_ = *std::max_element(thermal_mean_.begin(), thermal_mean_.end());
    thermal_prob_max_ = thermal_mean_max_ / (1.0 + thermal_mean_max_);
}

PairSample FrameGenerator::sample_pair(Rng& rng) const {
    const auto& g = scene_.geometry;
    const double cx = g.center_x();
    const double cy = g.center_y();
    PairSample s;
    int attempt = 0;
    for (;; ++attempt) {
        if (attempt == kMaxPumpAttempts) throw SimulationError("pump envelope outside sensor");
        const double ux = cx + scene_.pump_sigma_px * rng.normal();
        const double uy = cy + scene_.pump_sigma_px * rng.normal();
        const long long rx = round_half_away(ux);
        const long long ry = round_half_away(uy);
        if (rx >= 0 && rx < scene_.width && ry >= 0 && ry < scene_.height) {
            s.ref = {static_cast<int>(rx), static_cast<int>(ry)};
            break;
        }
    }
    long long px = g.center_x2 - s.ref.x;
    long long py = g.center_y2 - s.ref.y;
    if (g.sigma_px > 0.0) {
        px += round_half_away(g.sigma_px * rng.normal());
        py += round_half_away(g.sigma_px * rng.normal());
    }
    const bool on_sensor = px >= 0 && px < scene_.width && py >= 0 && py < scene_.height;
    const double u_probe = rng.uniform();
    const double u_ref = rng.uniform();
    if (on_sensor) {
        s.probe = Pixel{static_cast<int>(px), static_cast<int>(py)};
        s.detected_probe = u_probe < probe_survival_[static_cast<std::size_t>(py) * scene_.width + px];
    }
    s.detected_ref = u_ref < scene_.detector.qe_ref;
    return s;
}

void FrameGenerator::generate_into(Rng& rng, std::span<Word> probe, std::span<Word> ref) const {
    const std::uint64_t pairs = rng.poisson(scene_.pair_rate);
    for (std::uint64_t k = 0; k < pairs; ++k) {
        const PairSample s = sample_pair(rng);
        if (s.detected_probe) set_bit(probe, wpr_, s.probe->x, s.probe->y);
        if (s.detected_ref) set_bit(ref, wpr_, s.ref.x, s.ref.y);
    }
    sample_thermal(rng, [&](int x, int y) { set_bit(probe, wpr_, x, y); });
    sample_dark(rng, [&](int x, int y) { set_bit(probe, wpr_, x, y); });
    sample_dark(rng, [&](int x, int y) { set_bit(ref, wpr_, x, y); });
}

std::pair<Frame, Frame> FrameGenerator::generate(Rng& rng) const {
    Frame probe(scene_.width, scene_.height);
    Frame ref(scene_.width, scene_.height);
    generate_into(rng, probe.words(), ref.words());
    return {std::move(probe), std::move(ref)};
}

StackPair FrameGenerator::generate_range(std::uint64_t first, std::size_t count, unsigned workers) const {
    StackPair out{FrameStack(scene_.width, scene_.height, count), FrameStack(scene_.width, scene_.height, count)};
    parallel_ranges(count, workers, [&](std::size_t begin, std::size_t end, unsigned) {
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng = frame_rng(scene_.seed, first + i);
            generate_into(rng, out.probe.frame_words_mut(i), out.ref.frame_words_mut(i));
        }
    });
    return out;
}

PairSample sample_pair(const CorrelationGeometry& geometry, double pump_sigma_px, const SceneConfig& scene,
                       Rng& rng) {
    SceneConfig s = scene;
    s.geometry = geometry;
    s.pump_sigma_px = pump_sigma_px;
    return FrameGenerator(std::move(s)).sample_pair(rng);
}

std::vector<Pixel> sample_thermal_events(const Map2D& thermal_map, double thermal_scale, Rng& rng,
                                         bool bunching) {
    SceneConfig s = default_scene(thermal_map.width, thermal_map.height);
    s.thermal_map = thermal_map;
    s.thermal_scale = thermal_scale;
    s.thermal_bunching = bunching;
    FrameGenerator gen(std::move(s));
    std::vector<Pixel> out;
    gen.sample_thermal(rng, [&](int x, int y) { out.push_back({x, y}); });
    return out;
}

std::vector<Pixel> sample_dark_events(const DetectorModel& detector, int width, int height, Rng& rng) {
    SceneConfig s = default_scene(width, height);
    s.detector = detector;
    FrameGenerator gen(std::move(s));
    std::vector<Pixel> out;
    gen.sample_dark(rng, [&](int x, int y) { out.push_back({x, y}); });
    return out;
}

std::pair<Frame, Frame> generate_frame(const SceneConfig& scene, Rng& rng) {
    return FrameGenerator(scene).generate(rng);
}

StackPair generate_stack(const SceneConfig& scene, std::size_t n_frames, unsigned workers) {
    if (n_frames < 1) throw ValidationError("n_frames must be >= 1");
    return FrameGenerator(scene).generate_range(0, n_frames, workers);
}

void generate_chunks(const SceneConfig& scene, std::uint64_t n_frames, std::size_t chunk_frames,
                     unsigned workers, const std::function<void(const StackPair&, std::uint64_t)>& sink) {
    if (n_frames < 1) throw ValidationError("n_frames must be >= 1");
    if (chunk_frames < 1) throw ValidationError("chunk_frames must be >= 1");
    const FrameGenerator gen(scene);
    for (std::uint64_t first = 0; first < n_frames; first += chunk_frames) {
        const std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(chunk_frames, n_frames - first));
        sink(gen.generate_range(first, count, workers), first);
    }
}

} // namespace qim
