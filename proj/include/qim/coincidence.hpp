#pragma once

#include <cstdint>
#include <vector>

#include "qim/frame.hpp"
#include "qim/model.hpp"

namespace qim {

/// True when point reflection through (cx2/2, cy2/2) maps the
/// width x height grid onto itself, i.e. the center is the image center.
bool reflection_is_permutation(int width, int height, int center_x2, int center_y2) noexcept;

/// Throws AnalysisError unless the reflection is a grid permutation.
void require_reflectable(int width, int height, int center_x2, int center_y2);

/// Point reflection of every event: (x, y) -> (cx2 - x, cy2 - y).
Frame rotate_pi(const FrameView& frame, int center_x2, int center_y2);
Frame rotate_pi(const FrameView& frame, const CorrelationGeometry& geometry);

enum class CorrelationMethod { automatic, direct, fft };

struct CoincidenceOptions {
    /// Chebyshev radius of the AND match window; 0 is the pixel-exact product.
    int tolerance = 0;
    /// Displacement range tracked for cross-correlation; negative disables it.
    int max_disp = -1;
};

/// Streaming per-frame accumulator for classical, AND and cross-correlation
/// statistics. Partial accumulators over any partition of the frames merge
/// to exactly the sequential result.
class CoincidenceAccumulator {
public:
    /// Throws AnalysisError if the geometry does not reflect the grid onto itself.
    CoincidenceAccumulator(int width, int height, const CorrelationGeometry& geometry,
                           CoincidenceOptions options = {});

    void add_frame(const FrameView& probe, const FrameView& ref);
    /// Throws AnalysisError on dimension or frame-count mismatch.
    void add(const FrameStack& probe, const FrameStack& ref, unsigned workers = 1);
    void merge(const CoincidenceAccumulator& other);

    std::uint64_t frames() const noexcept { return frames_; }
    const CountImage& probe_counts() const noexcept { return probe_; }
    /// Reference counts in sensor coordinates (not rotated).
    const CountImage& ref_counts() const noexcept { return ref_; }
    const CountImage& and_counts() const noexcept { return and_; }
    CountImage rotated_ref_counts() const;

    /// N * pbar(x) * rtilde(x): expected AND counts for independent streams.
    RealImage baseline() const;
    /// Throws AnalysisError if built without a displacement range.
    CorrelationMap correlation(CorrelationMethod method = CorrelationMethod::automatic) const;

    const CoincidenceOptions& options() const noexcept { return options_; }

private:
    int width_;
    int height_;
    CorrelationGeometry geometry_;
    CoincidenceOptions options_;
    std::size_t wpr_;
    std::uint64_t frames_ = 0;
    CountImage probe_;
    CountImage ref_;
    CountImage and_;
    std::vector<std::uint64_t> pair_counts_;
    std::vector<Word> rotated_;
    std::vector<Word> dilated_;
    std::vector<Pixel> probe_events_;
    std::vector<Pixel> ref_events_;
};

CountImage and_accumulate(const FrameStack& probe, const FrameStack& ref, const CorrelationGeometry& geometry,
                          int tolerance = 0, unsigned workers = 1);

CountImage classical_accumulate(const FrameStack& stack, unsigned workers = 1);

/// value(d) = (1/N) sum_f sum_x probe_f(x) rref_f(x + d) - sum_x pbar(x) rbar(x + d),
/// rref the pi-rotated reference, out-of-range x + d omitted in both sums.
CorrelationMap cross_correlate(const FrameStack& probe, const FrameStack& ref, const CorrelationGeometry& geometry,
                               int max_disp, unsigned workers = 1,
                               CorrelationMethod method = CorrelationMethod::automatic);

RealImage accidental_baseline(const FrameStack& probe, const FrameStack& ref, const CorrelationGeometry& geometry);

/// sum_x a(x) b(x + d) for |d| <= max_disp, by zero-padded FFT or direct sum.
std::vector<double> correlate_images(const std::vector<double>& a, const std::vector<double>& b, int width,
                                     int height, int max_disp, CorrelationMethod method);

struct PeakSummary {
    int dx = 0;
    int dy = 0;
    double amplitude = 0.0;
    double background_mean = 0.0;
    double background_std = 0.0;
    /// amplitude / background_std; +inf when the background is flat.
    double ratio = 0.0;
    /// RMS widths of the baseline-subtracted peak within the exclusion window.
    double width_x = 0.0;
    double width_y = 0.0;
    std::size_t background_cells = 0;
};

/// Locates the maximum and measures the background over cells farther than
/// `exclusion` (Chebyshev) from it.
PeakSummary summarize_peak(const CorrelationMap& map, int exclusion = 1);

/// Pixels where and(x) > min(probe(x), ref(reflect(x))). Zero for any valid
/// pixel-exact AND image.
std::size_t count_bound_violations(const CountImage& and_image, const CountImage& probe_counts,
                                   const CountImage& ref_counts, const CorrelationGeometry& geometry);

} // namespace qim
