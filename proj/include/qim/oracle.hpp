#pragma once

#include <vector>

#include "qim/model.hpp"

namespace qim {

/// Per-pixel per-frame event probabilities predicted for a scene, in
/// probe/sensor coordinates. p_true and p_acc are indexed by probe pixel x
/// and refer to the AND of probe(x) with the reference at reflect(x).
struct RatePrediction {
    int width = 0;
    int height = 0;
    std::vector<double> p_probe;
    std::vector<double> p_ref;
    std::vector<double> p_true;
    std::vector<double> p_acc;
    /// Mean SPDC photons per frame reaching each probe pixel, before
    /// object, loss and detection.
    std::vector<double> pair_arrival;
    double q_match = 1.0;

    std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width + x; }
    double p_and(std::size_t i) const noexcept { return p_true[i] + p_acc[i]; }
};

/// Probability that isotropic Gaussian jitter of std sigma_px rounds to a
/// zero offset on both axes.
double matched_pixel_prob(double sigma_px);

/// P(round(sigma * Z) = offset) for one axis.
double jitter_offset_prob(double sigma_px, int offset);

/// Marginal probability that a thermal pixel with mean photon number m
/// produces a thresholded event; averages over the exponential per-frame
/// gain when `bunching` is set.
double thermal_event_prob(double m, bool bunching);

/// Closed-form rates for a validated scene. Pair counts per pixel class are
/// Poisson by thinning, so the per-pixel marginals and the AND probability
/// are exact under the simulator's model; p_acc is the AND probability not
/// explained by a true pair.
RatePrediction expected_rates(const SceneConfig& scene);

struct ContrastPrediction {
    double v_classical = 0.0;
    double v_quantum = 0.0;
    double advantage = 0.0;
};

/// Michelson contrasts of the expected classical and AND images over the
/// given ROIs, and their ratio. Throws AnalysisError on zero denominators.
ContrastPrediction predicted_contrasts(const SceneConfig& scene, const Roi& bright, const Roi& dark);

/// Uniform-scene closed form. `signal` is the detected SPDC probe rate in the
/// bright region (s * eta), `background` the thermal + dark floor b,
/// `ref_rate` the matched reference occupancy r and `herald` the
/// heralding factor h = q_match * qe_ref.
///   V_C = s / (s + 2b),  V_Q = s(h + r) / (s(h + r) + 2br)
struct UniformContrastModel {
    double signal = 0.0;
    double background = 0.0;
    double ref_rate = 0.0;
    double herald = 0.0;

    double v_classical() const;
    double v_quantum() const;
    double advantage() const;
    /// Limit of the advantage as the signal goes to zero: (h + r) / r.
    double advantage_low_signal_limit() const;
};

} // namespace qim
