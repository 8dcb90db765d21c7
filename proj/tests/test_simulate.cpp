#include <bit>
#include <cmath>
#include <random>

#include "doctest.h"
#include "qim/error.hpp"
#include "qim/oracle.hpp"
#include "qim/simulate.hpp"
#include "test_support.hpp"

using namespace qim;

namespace {

// Independent Monte Carlo oracle: fraction of 2-D jitter draws that round
// to zero offset on both axes.
double matched_fraction_mc(double sigma, int draws) {
    std::mt19937_64 gen(20240611);
    std::normal_distribution<double> n(0.0, sigma);
    int hits = 0;
    for (int i = 0; i < draws; ++i) {
        if (std::llround(n(gen)) == 0 && std::llround(n(gen)) == 0) ++hits;
    }
    return static_cast<double>(hits) / draws;
}

SceneConfig quiet_scene() {
    SceneConfig s = default_scene(21, 21);
    s.detector.dark_event_prob = 0.0;
    return s;
}

std::uint64_t events(const FrameStack& st) {
    std::uint64_t n = 0;
    for (Word w : st.data()) n += static_cast<std::uint64_t>(std::popcount(w));
    return n;
}

} // namespace

TEST_CASE("zero jitter puts the probe at the exact reflection") {
    SceneConfig s = quiet_scene();
    s.geometry.sigma_px = 0.0;
    Rng rng(3, StreamDomain::test, 0);
    for (int i = 0; i < 2000; ++i) {
        const PairSample p = sample_pair(s.geometry, s.pump_sigma_px, s, rng);
        REQUIRE(p.probe.has_value());
        CHECK(p.probe->x == 20 - p.ref.x);
        CHECK(p.probe->y == 20 - p.ref.y);
        CHECK(p.detected_probe);
        CHECK(p.detected_ref);
    }
}

TEST_CASE("opaque object never detects the probe") {
    SceneConfig s = quiet_scene();
    s.object_map = Map2D(21, 21, 0.0);
    FrameGenerator gen(s);
    Rng rng(4, StreamDomain::test, 0);
    int ref_hits = 0;
    for (int i = 0; i < 5000; ++i) {
        const PairSample p = gen.sample_pair(rng);
        CHECK_FALSE(p.detected_probe);
        ref_hits += p.detected_ref;
    }
    CHECK(ref_hits == 5000);
}

TEST_CASE("matched-pixel fraction agrees with the Monte Carlo oracle") {
    const double sigma = 0.308;
    const double oracle = matched_fraction_mc(sigma, 10'000'000);
    CHECK(oracle == doctest::Approx(0.80).epsilon(0.01));

    SceneConfig s = default_scene();
    s.geometry.sigma_px = sigma;
    s.pump_sigma_px = 6.0;  // keep reflections away from the border
    FrameGenerator gen(s);
    Rng rng(5, StreamDomain::test, 0);
    const int n = 1'000'000;
    int matched = 0, detected = 0;
    for (int i = 0; i < n; ++i) {
        const PairSample p = gen.sample_pair(rng);
        if (!p.detected_probe || !p.detected_ref) continue;
        ++detected;
        matched += p.probe->x == 48 - p.ref.x && p.probe->y == 48 - p.ref.y;
    }
    CHECK(static_cast<double>(matched) / detected == doctest::Approx(oracle).epsilon(0.005));
}

TEST_CASE("a pump envelope that almost never hits the sensor is an error") {
    SceneConfig s = default_scene(3, 3);
    s.pump_sigma_px = 1e6;
    Rng rng(6, StreamDomain::test, 0);
    CHECK_THROWS_WITH_AS(sample_pair(s.geometry, s.pump_sigma_px, s, rng), "pump envelope outside sensor",
                         SimulationError);
}

TEST_CASE("thermal events") {
    Rng rng(7, StreamDomain::test, 0);
    CHECK(sample_thermal_events(Map2D(10, 10, 0.0), 1.0, rng).empty());

    // m = 1 -> p = 0.5
    const Map2D one(100, 100, 1.0);
    std::size_t total = 0;
    for (int f = 0; f < 50; ++f) total += sample_thermal_events(one, 1.0, rng).size();
    CHECK(static_cast<double>(total) / (50 * 10000) == doctest::Approx(0.5).epsilon(0.01));

    // m = 0.002 with scale 2 -> p = 0.004 / 1.004
    const Map2D low(49, 49, 0.002);
    total = 0;
    const int frames = 20000;
    for (int f = 0; f < frames; ++f) total += sample_thermal_events(low, 2.0, rng).size();
    const double expected = frames * 2401 * (0.004 / 1.004);
    CHECK(test::within_poisson(static_cast<double>(total), expected));
}

TEST_CASE("bunching raises the variance of per-frame thermal totals") {
    const Map2D map(49, 49, 0.004);
    auto moments = [&](bool bunching) {
        Rng rng(8, StreamDomain::test, bunching ? 1 : 0);
        double s = 0, s2 = 0;
        const int frames = 100000;
        for (int f = 0; f < frames; ++f) {
            const double c = static_cast<double>(sample_thermal_events(map, 1.0, rng, bunching).size());
            s += c;
            s2 += c * c;
        }
        const double mean = s / frames;
        return std::pair{mean, s2 / frames - mean * mean};
    };
    const auto [m0, v0] = moments(false);
    const auto [m1, v1] = moments(true);
    CHECK(v0 == doctest::Approx(m0).epsilon(0.03));
    CHECK(v1 > 3.0 * m1);
}

TEST_CASE("dark events") {
    Rng rng(9, StreamDomain::test, 0);
    CHECK(sample_dark_events(DetectorModel{1, 1, 0.0}, 49, 49, rng).empty());

    const DetectorModel det{1, 1, 0.0016};
    CHECK(49 * 49 * det.dark_event_prob == doctest::Approx(3.8416));
    std::vector<std::uint32_t> per_pixel(49 * 49, 0);
    const int frames = 100000;
    std::uint64_t total = 0;
    for (int f = 0; f < frames; ++f) {
        for (const Pixel& p : sample_dark_events(det, 49, 49, rng)) {
            ++per_pixel[static_cast<std::size_t>(p.y) * 49 + p.x];
            ++total;
        }
    }
    CHECK(static_cast<double>(total) / frames == doctest::Approx(3.8416).epsilon(0.01));
    const double se = std::sqrt(0.0016 * (1 - 0.0016) / frames);
    int outside = 0;
    for (auto c : per_pixel) outside += std::abs(c / static_cast<double>(frames) - 0.0016) > 4 * se;
    CHECK(outside <= 2);  // ~0.15 expected from 2401 pixels at 4 sigma
}

TEST_CASE("generate_frame") {
    SceneConfig s = default_scene();
    s.pair_rate = 0;
    s.detector.dark_event_prob = 0;
    Rng rng(10, StreamDomain::test, 0);
    const auto [p, r] = generate_frame(s, rng);
    CHECK(p.event_count() == 0);
    CHECK(r.event_count() == 0);

    const SceneConfig d = default_scene();
    Rng a(11, StreamDomain::test, 0), b(11, StreamDomain::test, 0);
    CHECK(generate_frame(d, a) == generate_frame(d, b));
}

TEST_CASE("default scene probe occupancy is about 0.0032") {
    const SceneConfig s = default_scene();
    const std::size_t frames = 100000;
    const StackPair st = generate_stack(s, frames, 0);
    const double cells = static_cast<double>(frames) * 2401;
    const double occ = static_cast<double>(events(st.probe)) / cells;
    CHECK(occ == doctest::Approx(0.0032).epsilon(0.03));
    const RatePrediction pred = expected_rates(s);
    double mean = 0;
    for (double v : pred.p_probe) mean += v;
    mean /= 2401;
    CHECK(test::within_poisson(static_cast<double>(events(st.probe)), mean * cells));
}

TEST_CASE("stacks are deterministic across worker counts and sensitive to the seed") {
    SceneConfig s = default_scene();
    s.thermal_map = Map2D(49, 49, 0.002);
    s.thermal_bunching = true;
    const StackPair one = generate_stack(s, 3000, 1);
    const StackPair eight = generate_stack(s, 3000, 8);
    CHECK(one.probe == eight.probe);
    CHECK(one.ref == eight.ref);

    std::vector<StackPair> chunks;
    FrameStack joined(49, 49);
    generate_chunks(s, 3000, 700, 3, [&](const StackPair& c, std::uint64_t) {
        for (std::size_t i = 0; i < c.probe.size(); ++i) joined.push_back(c.probe.frame(i));
    });
    CHECK(joined == one.probe);

    s.seed += 1;
    CHECK_FALSE(generate_stack(s, 3000, 4).probe == one.probe);
    CHECK_THROWS_AS(generate_stack(s, 0), ValidationError);
}
