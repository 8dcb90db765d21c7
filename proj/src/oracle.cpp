#include "qim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qim/error.hpp"

namespace qim {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Probability that a pump-envelope sample lands in each pixel along one axis,
// conditioned on landing on the sensor.
std::vector<double> ref_axis_probs(int length, double center, double pump_sigma) {
    std::vector<double> p(static_cast<std::size_t>(length));
    const double lo = normal_cdf((-0.5 - center) / pump_sigma);
    const double hi = normal_cdf((length - 0.5 - center) / pump_sigma);
    const double z = hi - lo;
    for (int i = 0; i < length; ++i) {
        const double a = normal_cdf((i - 0.5 - center) / pump_sigma);
        const double b = normal_cdf((i + 0.5 - center) / pump_sigma);
        p[static_cast<std::size_t>(i)] = z > 0.0 ? (b - a) / z : 0.0;
    }
    return p;
}

// Probe pixel distribution along one axis: reflection of the reference pixel
// through center2/2, plus rounded jitter. Mass falling off the sensor is lost.
std::vector<double> probe_axis_probs(const std::vector<double>& ref, int center2, double sigma) {
    const int length = static_cast<int>(ref.size());
    std::vector<double> p(ref.size(), 0.0);
    const int reach = sigma > 0.0 ? static_cast<int>(std::ceil(10.0 * sigma)) + 1 : 0;
    std::vector<double> kernel(static_cast<std::size_t>(2 * reach + 1));
    for (int d = -reach; d <= reach; ++d) kernel[static_cast<std::size_t>(d + reach)] = jitter_offset_prob(sigma, d);
    for (int r = 0; r < length; ++r) {
        const int ideal = center2 - r;
        for (int d = -reach; d <= reach; ++d) {
            const int x = ideal + d;
            if (x < 0 || x >= length) continue;
            p[static_cast<std::size_t>(x)] += ref[static_cast<std::size_t>(r)] * kernel[static_cast<std::size_t>(d + reach)];
        }
    }
    return p;
}

double roi_mean(const std::vector<double>& values, int width, const Roi& roi) {
    double sum = 0.0;
    for (const Pixel& p : roi.covered()) sum += values[static_cast<std::size_t>(p.y) * width + p.x];
    return sum / static_cast<double>(roi.size());
}

double michelson(double bright, double dark) {
    if (!(bright + dark > 0.0)) throw AnalysisError("undefined contrast: bright and dark means are both zero");
    return (bright - dark) / (bright + dark);
}

} // namespace

double jitter_offset_prob(double sigma_px, int offset) {
    if (!(sigma_px > 0.0)) return offset == 0 ? 1.0 : 0.0;
    return normal_cdf((offset + 0.5) / sigma_px) - normal_cdf((offset - 0.5) / sigma_px);
}

double matched_pixel_prob(double sigma_px) {
    if (sigma_px < 0.0) throw ValidationError("sigma_px must be >= 0");
    const double q = sigma_px > 0.0 ? std::erf(0.5 / (sigma_px * std::numbers::sqrt2)) : 1.0;
    return q * q;
}

double thermal_event_prob(double m, bool bunching) {
    if (!(m > 0.0)) return 0.0;
    if (!bunching) return m / (1.0 + m);
    // E_g[m g / (1 + m g)], g ~ Exp(1). Composite Simpson on [0, 60]; the
    // integrand is smooth and the tail beyond 60 is below e^-60.
    constexpr int kIntervals = 60000;
    constexpr double kUpper = 60.0;
    const double h = kUpper / kIntervals;
    auto f = [m](double g) { return std::exp(-g) * m * g / (1.0 + m * g); };
    double sum = f(0.0) + f(kUpper);
    for (int i = 1; i < kIntervals; ++i) sum += f(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

RatePrediction expected_rates(const SceneConfig& scene) {
    validate_scene(scene);
    const int w = scene.width;
    const int h = scene.height;
    const auto& g = scene.geometry;
    const auto ref_x = ref_axis_probs(w, g.center_x(), scene.pump_sigma_px);
    const auto ref_y = ref_axis_probs(h, g.center_y(), scene.pump_sigma_px);
    const auto probe_x = probe_axis_probs(ref_x, g.center_x2, g.sigma_px);
    const auto probe_y = probe_axis_probs(ref_y, g.center_y2, g.sigma_px);
    const double k0 = jitter_offset_prob(g.sigma_px, 0);

    RatePrediction out;
    out.width = w;
    out.height = h;
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    out.p_probe.resize(n);
    out.p_ref.resize(n);
    out.p_true.assign(n, 0.0);
    out.p_acc.assign(n, 0.0);
    out.pair_arrival.resize(n);
    out.q_match = matched_pixel_prob(g.sigma_px);

    const double lambda = scene.pair_rate;
    const double qp = scene.detector.qe_probe;
    const double qr = scene.detector.qe_ref;
    const double eta = scene.probe_loss_eta;
    const double keep_dark = 1.0 - scene.detector.dark_event_prob;

    std::vector<double> mu_ref(n), mu_probe(n), keep_thermal(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = out.index(x, y);
            const double arrival = lambda * probe_x[static_cast<std::size_t>(x)] * probe_y[static_cast<std::size_t>(y)];
            out.pair_arrival[i] = arrival;
            mu_probe[i] = arrival * scene.object_map.values[i] * eta * qp;
            mu_ref[i] = lambda * ref_x[static_cast<std::size_t>(x)] * ref_y[static_cast<std::size_t>(y)] * qr;
            keep_thermal[i] =
                1.0 - thermal_event_prob(scene.thermal_scale * scene.thermal_map.values[i], scene.thermal_bunching);
            out.p_probe[i] = 1.0 - std::exp(-mu_probe[i]) * keep_thermal[i] * keep_dark;
            out.p_ref[i] = 1.0 - std::exp(-mu_ref[i]) * keep_dark;
        }
    }

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int rx = g.center_x2 - x;
            const int ry = g.center_y2 - y;
            if (rx < 0 || rx >= w || ry < 0 || ry >= h) continue;
            const std::size_t i = out.index(x, y);
            const std::size_t j = out.index(rx, ry);
            // Pairs with reference at reflect(x) and zero jitter, both detected.
            const double both = lambda * ref_x[static_cast<std::size_t>(rx)] * ref_y[static_cast<std::size_t>(ry)] * k0 *
                                k0 * scene.object_map.values[i] * eta * qp * qr;
            const double none_probe = std::exp(-mu_probe[i]) * keep_thermal[i] * keep_dark;
            const double none_ref = std::exp(-mu_ref[j]) * keep_dark;
            const double none_either =
                std::exp(-(mu_probe[i] + mu_ref[j] - both)) * keep_thermal[i] * keep_dark * keep_dark;
            const double p_and = std::clamp(1.0 - none_probe - none_ref + none_either, 0.0, 1.0);
            const double p_true = -std::expm1(-both);
            out.p_true[i] = p_true;
            out.p_acc[i] = std::max(0.0, p_and - p_true);
        }
    }
    return out;
}

ContrastPrediction predicted_contrasts(const SceneConfig& scene, const Roi& bright, const Roi& dark) {
    bright.validate(scene.width, scene.height);
    dark.validate(scene.width, scene.height);
    if (!bright.disjoint_with(dark)) throw AnalysisError("bright and dark ROIs overlap");
    const RatePrediction r = expected_rates(scene);
    std::vector<double> p_and(r.p_true.size());
    for (std::size_t i = 0; i < p_and.size(); ++i) p_and[i] = r.p_and(i);
    ContrastPrediction c;
    c.v_classical = michelson(roi_mean(r.p_probe, r.width, bright), roi_mean(r.p_probe, r.width, dark));
    c.v_quantum = michelson(roi_mean(p_and, r.width, bright), roi_mean(p_and, r.width, dark));
    if (c.v_classical == 0.0) throw AnalysisError("classical contrast is zero; advantage undefined");
    c.advantage = c.v_quantum / c.v_classical;
    return c;
}

double UniformContrastModel::v_classical() const {
    const double den = signal + 2.0 * background;
    if (!(den > 0.0)) throw AnalysisError("classical contrast denominator is zero");
    return signal / den;
}

double UniformContrastModel::v_quantum() const {
    const double num = signal * (herald + ref_rate);
    const double den = num + 2.0 * background * ref_rate;
    if (!(den > 0.0)) throw AnalysisError("quantum contrast denominator is zero");
    return num / den;
}

double UniformContrastModel::advantage() const {
    const double vc = v_classical();
    if (vc == 0.0) throw AnalysisError("classical contrast is zero; advantage undefined");
    return v_quantum() / vc;
}

double UniformContrastModel::advantage_low_signal_limit() const {
    if (!(ref_rate > 0.0)) throw AnalysisError("reference rate must be > 0");
    return (herald + ref_rate) / ref_rate;
}

} // namespace qim
