#include "qim/metrics.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <limits>

#include "qim/coincidence.hpp"
#include "qim/oracle.hpp"
#include "qim/parallel.hpp"
#include "qim/simulate.hpp"

namespace qim {

namespace {

double roi_sum(const std::vector<double>& values, int width, const Roi& roi) {
    double s = 0.0;
    for (const Pixel& p : roi.covered()) s += values[static_cast<std::size_t>(p.y) * width + p.x];
    return s;
}

// Decision of a single-statistic midpoint threshold. Returns +1 for
// "present", -1 for "absent", 0 for a tie or degenerate statistic.
int threshold_vote(double statistic, double mean_present, double mean_absent) {
    if (mean_present == mean_absent) return 0;
    const double mid = 0.5 * (mean_present + mean_absent);
    if (statistic == mid) return 0;
    const bool above = statistic > mid;
    return (above == (mean_present > mean_absent)) ? 1 : -1;
}

// Sign of the Poisson log-likelihood ratio for independent statistics.
int likelihood_vote(const double* stats, const double* present, const double* absent, int n) {
    double llr = 0.0;
    bool informative = false;
    for (int k = 0; k < n; ++k) {
        const double s = stats[k], m1 = present[k], m0 = absent[k];
        if (m1 == m0) continue;
        informative = true;
        if (m0 == 0.0) {
            if (s > 0.0) return 1;
            llr -= m1;
        } else if (m1 == 0.0) {
            if (s > 0.0) return -1;
            llr += m0;
        } else {
            llr += s * std::log(m1 / m0) - (m1 - m0);
        }
    }
    if (!informative || llr == 0.0) return 0;
    return llr > 0.0 ? 1 : -1;
}

} // namespace

double michelson_contrast(double bright_mean, double dark_mean) {
    if (!(bright_mean + dark_mean > 0.0)) {
        throw AnalysisError("undefined contrast: bright and dark ROI means are both zero");
    }
    return (bright_mean - dark_mean) / (bright_mean + dark_mean);
}

double qi_advantage(double v_quantum, double v_classical) {
    if (v_classical == 0.0) throw AnalysisError("classical contrast is zero; advantage undefined");
    return v_quantum / v_classical;
}

NoiseRejection noise_rejection_ratio(const CountImage& classical, const CountImage& and_image, const Roi& object_roi,
                                     const Roi& mask_roi) {
    if (!object_roi.disjoint_with(mask_roi)) throw ValidationError("object and mask ROIs overlap");
    NoiseRejection r;
    r.classical_object_mean = roi_mean(classical, object_roi);
    r.classical_mask_mean = roi_mean(classical, mask_roi);
    r.and_object_mean = roi_mean(and_image, object_roi);
    r.and_mask_mean = roi_mean(and_image, mask_roi);
    if (r.classical_mask_mean == 0.0 || r.classical_object_mean == 0.0) {
        throw AnalysisError("noise rejection undefined: classical object or mask mean is zero");
    }
    const double rho_classical = r.classical_object_mean / r.classical_mask_mean;
    if (r.and_mask_mean == 0.0) {
        if (r.and_object_mean == 0.0) throw AnalysisError("noise rejection undefined: AND image empty in both ROIs");
        r.infinite = true;
        r.value = std::numeric_limits<double>::infinity();
        return r;
    }
    r.value = (r.and_object_mean / r.and_mask_mean) / rho_classical;
    return r;
}

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::classical: return "classical";
    case Strategy::quantum: return "quantum";
    case Strategy::combined: return "combined";
    }
    return "unknown";
}

Strategy strategy_from_string(std::string_view s) {
    if (s == "classical") return Strategy::classical;
    if (s == "quantum") return Strategy::quantum;
    if (s == "combined") return Strategy::combined;
    throw ValidationError("unknown strategy '" + std::string(s) + "'");
}

void wilson_interval(std::uint64_t successes, std::uint64_t n, double& low, double& high) {
    if (n == 0) {
        low = 0.0;
        high = 1.0;
        return;
    }
    constexpr double z = 1.959963984540054;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double den = 1.0 + z * z / nn;
    const double center = (p + z * z / (2.0 * nn)) / den;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / den;
    low = std::max(0.0, center - half);
    high = std::min(1.0, center + half);
}

PresenceOracle presence_oracle(const SceneConfig& scene, const Roi& object_roi, std::uint64_t block_frames) {
    object_roi.validate(scene.width, scene.height);
    SceneConfig absent = scene;
    for (const Pixel& p : object_roi.covered()) absent.object_map.at(p.x, p.y) = 0.0;
    const RatePrediction r1 = expected_rates(scene);
    const RatePrediction r0 = expected_rates(absent);
    auto and_sum = [&](const RatePrediction& r) {
        double s = 0.0;
        for (const Pixel& p : object_roi.covered()) s += r.p_and(r.index(p.x, p.y));
        return s;
    };
    const double m = static_cast<double>(block_frames);
    PresenceOracle o;
    o.classical_present = m * roi_sum(r1.p_probe, r1.width, object_roi);
    o.classical_absent = m * roi_sum(r0.p_probe, r0.width, object_roi);
    o.quantum_present = m * and_sum(r1);
    o.quantum_absent = m * and_sum(r0);
    return o;
}

std::vector<BerEstimate> presence_ber(const SceneConfig& scene, const Roi& object_roi, const PresenceOptions& options,
                                      const std::vector<Strategy>& strategies) {
    validate_scene(scene);
    if (options.block_frames < 1) throw ValidationError("block_frames must be >= 1");
    if (options.trials < 100) throw ValidationError("trials must be >= 100");
    if (strategies.empty()) throw ValidationError("no strategies requested");
    object_roi.validate(scene.width, scene.height);
    const auto& g = scene.geometry;
    require_reflectable(scene.width, scene.height, g.center_x2, g.center_y2);

    const PresenceOracle o = presence_oracle(scene, object_roi, options.block_frames);
    SceneConfig absent_scene = scene;
    for (const Pixel& p : object_roi.covered()) absent_scene.object_map.at(p.x, p.y) = 0.0;
    const FrameGenerator present_gen(scene);
    const FrameGenerator absent_gen(absent_scene);

    const std::size_t wpr = words_per_row(scene.width);
    const std::size_t frame_words = wpr * static_cast<std::size_t>(scene.height);
    std::vector<Word> mask(frame_words, 0);
    for (const Pixel& p : object_roi.covered()) {
        mask[static_cast<std::size_t>(p.y) * wpr + static_cast<std::size_t>(p.x) / kWordBits] |= Word{1}
                                                                                             << (p.x % kWordBits);
    }

    const double present_means[2] = {o.classical_present, o.quantum_present};
    const double absent_means[2] = {o.classical_absent, o.quantum_absent};

    const std::uint64_t trials = options.trials;
    const std::uint64_t m = options.block_frames;
    std::vector<std::vector<std::uint64_t>> errors_per_worker;
    const unsigned workers = options.workers == 0 ? default_workers() : options.workers;
    errors_per_worker.assign(std::max<unsigned>(1, std::min<std::uint64_t>(workers, trials)),
                             std::vector<std::uint64_t>(strategies.size(), 0));

    parallel_ranges(static_cast<std::size_t>(trials), static_cast<unsigned>(errors_per_worker.size()),
                    [&](std::size_t begin, std::size_t end, unsigned w) {
                        std::vector<Word> probe(frame_words), ref(frame_words), rotated(frame_words);
                        for (std::size_t t = begin; t < end; ++t) {
                            const std::uint64_t base = static_cast<std::uint64_t>(t) * (m + 1);
                            Rng trial_rng(scene.seed, StreamDomain::presence_trial, base);
                            const bool present = trial_rng.bernoulli(0.5);
                            const FrameGenerator& gen = present ? present_gen : absent_gen;
                            std::uint64_t s_classical = 0, s_quantum = 0;
                            for (std::uint64_t f = 0; f < m; ++f) {
                                std::fill(probe.begin(), probe.end(), Word{0});
                                std::fill(ref.begin(), ref.end(), Word{0});
                                std::fill(rotated.begin(), rotated.end(), Word{0});
                                Rng rng(scene.seed, StreamDomain::presence_trial, base + 1 + f);
                                gen.generate_into(rng, probe, ref);
                                FrameView(scene.width, scene.height, ref).for_each_event([&](int x, int y) {
                                    const int rx = g.center_x2 - x, ry = g.center_y2 - y;
                                    rotated[static_cast<std::size_t>(ry) * wpr + static_cast<std::size_t>(rx) / kWordBits] |=
                                        Word{1} << (rx % kWordBits);
                                });
                                for (std::size_t k = 0; k < frame_words; ++k) {
                                    const Word pm = probe[k] & mask[k];
                                    s_classical += static_cast<std::uint64_t>(std::popcount(pm));
                                    s_quantum += static_cast<std::uint64_t>(std::popcount(pm & rotated[k]));
                                }
                            }
                            const double stats[2] = {static_cast<double>(s_classical), static_cast<double>(s_quantum)};
                            // One tie-break coin per strategy, drawn unconditionally so a
                            // strategy's result does not depend on which others were requested.
                            bool coins[3];
                            for (bool& c : coins) c = trial_rng.bernoulli(0.5);
                            for (std::size_t k = 0; k < strategies.size(); ++k) {
                                int vote = 0;
                                switch (strategies[k]) {
                                case Strategy::classical:
                                    vote = threshold_vote(stats[0], present_means[0], absent_means[0]);
                                    break;
                                case Strategy::quantum:
                                    vote = threshold_vote(stats[1], present_means[1], absent_means[1]);
                                    break;
                                case Strategy::combined:
                                    vote = likelihood_vote(stats, present_means, absent_means, 2);
                                    break;
                                }
                                const bool coin = coins[static_cast<int>(strategies[k])];
                                const bool decide_present = vote == 0 ? coin : vote > 0;
                                if (decide_present != present) ++errors_per_worker[w][k];
                            }
                        }
                    });

    std::vector<BerEstimate> out;
    for (std::size_t k = 0; k < strategies.size(); ++k) {
        BerEstimate e;
        e.strategy = strategies[k];
        e.trials = trials;
        for (const auto& per : errors_per_worker) e.errors += per[k];
        e.ber = static_cast<double>(e.errors) / static_cast<double>(trials);
        wilson_interval(e.errors, trials, e.ci_low, e.ci_high);
        switch (e.strategy) {
        case Strategy::classical: e.degenerate = o.classical_present == o.classical_absent; break;
        case Strategy::quantum: e.degenerate = o.quantum_present == o.quantum_absent; break;
        case Strategy::combined:
            e.degenerate = o.classical_present == o.classical_absent && o.quantum_present == o.quantum_absent;
            break;
        }
        out.push_back(e);
    }
    return out;
}

} // namespace qim
