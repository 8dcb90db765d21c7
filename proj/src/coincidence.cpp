#include "qim/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "qim/error.hpp"
#include "qim/parallel.hpp"

namespace qim {

namespace {

// FFTW planning is not thread-safe.
std::mutex g_fftw_mutex;

void check_pair(const FrameStack& probe, const FrameStack& ref) {
    if (probe.width() != ref.width() || probe.height() != ref.height()) {
        throw AnalysisError("probe stack " + std::to_string(probe.width()) + "x" + std::to_string(probe.height()) +
                            " and reference stack " + std::to_string(ref.width()) + "x" +
                            std::to_string(ref.height()) + " differ in size");
    }
    if (probe.size() != ref.size()) {
        throw AnalysisError("probe stack has " + std::to_string(probe.size()) + " frames, reference stack has " +
                            std::to_string(ref.size()));
    }
}

inline void set_bit(std::vector<Word>& words, std::size_t wpr, int x, int y) noexcept {
    words[static_cast<std::size_t>(y) * wpr + static_cast<std::size_t>(x) / kWordBits] |= Word{1}
                                                                                       << (x % kWordBits);
}

// Shift a bit-packed row left/right by one pixel (toward higher/lower x).
void shift_row_up(std::span<const Word> in, std::span<Word> out, int width) {
    Word carry = 0;
    for (std::size_t k = 0; k < in.size(); ++k) {
        out[k] = (in[k] << 1) | carry;
        carry = in[k] >> (kWordBits - 1);
    }
    const int tail = width % kWordBits;
    if (tail != 0) out.back() &= (Word{1} << tail) - 1;
}

void shift_row_down(std::span<const Word> in, std::span<Word> out) {
    Word carry = 0;
    for (std::size_t k = in.size(); k-- > 0;) {
        out[k] = (in[k] >> 1) | carry;
        carry = in[k] << (kWordBits - 1);
    }
}

std::vector<double> correlate_direct(const std::vector<double>& a, const std::vector<double>& b, int width,
                                     int height, int d) {
    const int side = 2 * d + 1;
    std::vector<double> out(static_cast<std::size_t>(side) * side, 0.0);
    for (int dy = -d; dy <= d; ++dy) {
        for (int dx = -d; dx <= d; ++dx) {
            double sum = 0.0;
            const int y0 = std::max(0, -dy), y1 = std::min(height, height - dy);
            const int x0 = std::max(0, -dx), x1 = std::min(width, width - dx);
            for (int y = y0; y < y1; ++y) {
                const double* ar = &a[static_cast<std::size_t>(y) * width];
                const double* br = &b[static_cast<std::size_t>(y + dy) * width + dx];
                for (int x = x0; x < x1; ++x) sum += ar[x] * br[x];
            }
            out[static_cast<std::size_t>(dy + d) * side + (dx + d)] = sum;
        }
    }
    return out;
}

std::vector<double> correlate_fft(const std::vector<double>& a, const std::vector<double>& b, int width,
                                  int height, int d) {
    // Circular correlation of length P is free of wrap-around for |lag| <= d
    // when P >= extent + d.
    const int pw = width + d;
    const int ph = height + d;
    const int cw = pw / 2 + 1;
    const std::size_t nreal = static_cast<std::size_t>(pw) * ph;
    const std::size_t ncomplex = static_cast<std::size_t>(ph) * cw;

    double* ra = fftw_alloc_real(nreal);
    double* rb = fftw_alloc_real(nreal);
    fftw_complex* fa = fftw_alloc_complex(ncomplex);
    fftw_complex* fb = fftw_alloc_complex(ncomplex);
    fftw_plan pa, pb, pinv;
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        pa = fftw_plan_dft_r2c_2d(ph, pw, ra, fa, FFTW_ESTIMATE);
        pb = fftw_plan_dft_r2c_2d(ph, pw, rb, fb, FFTW_ESTIMATE);
        pinv = fftw_plan_dft_c2r_2d(ph, pw, fa, ra, FFTW_ESTIMATE);
    }
    std::fill(ra, ra + nreal, 0.0);
    std::fill(rb, rb + nreal, 0.0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            ra[static_cast<std::size_t>(y) * pw + x] = a[static_cast<std::size_t>(y) * width + x];
            rb[static_cast<std::size_t>(y) * pw + x] = b[static_cast<std::size_t>(y) * width + x];
        }
    }
    fftw_execute(pa);
    fftw_execute(pb);
    // corr(d) = sum_x a(x) b(x + d)  <=>  F^-1[conj(A) B]
    for (std::size_t i = 0; i < ncomplex; ++i) {
        const std::complex<double> za(fa[i][0], fa[i][1]);
        const std::complex<double> zb(fb[i][0], fb[i][1]);
        const std::complex<double> z = std::conj(za) * zb;
        fa[i][0] = z.real();
        fa[i][1] = z.imag();
    }
    fftw_execute(pinv);

    const int side = 2 * d + 1;
    std::vector<double> out(static_cast<std::size_t>(side) * side, 0.0);
    const double scale = 1.0 / static_cast<double>(nreal);
    for (int dy = -d; dy <= d; ++dy) {
        for (int dx = -d; dx <= d; ++dx) {
            const int iy = (dy + ph) % ph;
            const int ix = (dx + pw) % pw;
            out[static_cast<std::size_t>(dy + d) * side + (dx + d)] = ra[static_cast<std::size_t>(iy) * pw + ix] * scale;
        }
    }
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        fftw_destroy_plan(pa);
        fftw_destroy_plan(pb);
        fftw_destroy_plan(pinv);
    }
    fftw_free(ra);
    fftw_free(rb);
    fftw_free(fa);
    fftw_free(fb);
    return out;
}

} // namespace

bool reflection_is_permutation(int width, int height, int center_x2, int center_y2) noexcept {
    return center_x2 == width - 1 && center_y2 == height - 1;
}

void require_reflectable(int width, int height, int center_x2, int center_y2) {
    if (reflection_is_permutation(width, height, center_x2, center_y2)) return;
    const bool parity_ok = (center_x2 % 2) == ((width - 1) % 2) && (center_y2 % 2) == ((height - 1) % 2);
    throw AnalysisError(std::string(parity_ok ? "center " : "center parity of ") + "(" +
                        std::to_string(center_x2 / 2.0) + ", " + std::to_string(center_y2 / 2.0) +
                        ") incompatible with " + std::to_string(width) + "x" + std::to_string(height) +
                        " image: reflection must map the grid onto itself (center (" +
                        std::to_string((width - 1) / 2.0) + ", " + std::to_string((height - 1) / 2.0) + "))");
}

Frame rotate_pi(const FrameView& frame, int center_x2, int center_y2) {
    require_reflectable(frame.width(), frame.height(), center_x2, center_y2);
    Frame out(frame.width(), frame.height());
    frame.for_each_event([&](int x, int y) { out.set_unchecked(center_x2 - x, center_y2 - y); });
    return out;
}

Frame rotate_pi(const FrameView& frame, const CorrelationGeometry& geometry) {
    return rotate_pi(frame, geometry.center_x2, geometry.center_y2);
}

CoincidenceAccumulator::CoincidenceAccumulator(int width, int height, const CorrelationGeometry& geometry,
                                               CoincidenceOptions options)
    : width_(width), height_(height), geometry_(geometry), options_(options), wpr_(words_per_row(width)),
      probe_(width, height, ImageKind::classical), ref_(width, height, ImageKind::classical),
      and_(width, height, ImageKind::and_image) {
    require_reflectable(width, height, geometry.center_x2, geometry.center_y2);
    if (options_.tolerance < 0) throw AnalysisError("tolerance must be >= 0");
    if (options_.max_disp >= 0) {
        const std::size_t side = static_cast<std::size_t>(2 * options_.max_disp + 1);
        pair_counts_.assign(side * side, 0);
    }
    rotated_.assign(wpr_ * static_cast<std::size_t>(height), 0);
    dilated_.assign(rotated_.size(), 0);
}

void CoincidenceAccumulator::add_frame(const FrameView& probe, const FrameView& ref) {
    if (probe.width() != width_ || probe.height() != height_ || ref.width() != width_ || ref.height() != height_) {
        throw AnalysisError("frame dimensions do not match accumulator");
    }
    ++frames_;
    probe.for_each_event([&](int x, int y) { ++probe_.at(x, y); });
    std::fill(rotated_.begin(), rotated_.end(), Word{0});
    ref.for_each_event([&](int x, int y) {
        ++ref_.at(x, y);
        set_bit(rotated_, wpr_, geometry_.center_x2 - x, geometry_.center_y2 - y);
    });

    const std::vector<Word>* match = &rotated_;
    if (options_.tolerance > 0) {
        // Chebyshev dilation of the rotated reference by `tolerance` pixels.
        std::vector<Word> row_dil(rotated_.size(), 0);
        std::vector<Word> tmp(wpr_);
        for (int y = 0; y < height_; ++y) {
            std::span<const Word> src(&rotated_[static_cast<std::size_t>(y) * wpr_], wpr_);
            std::span<Word> dst(&row_dil[static_cast<std::size_t>(y) * wpr_], wpr_);
            std::copy(src.begin(), src.end(), dst.begin());
            std::vector<Word> left(src.begin(), src.end()), right(src.begin(), src.end());
            for (int s = 0; s < options_.tolerance; ++s) {
                shift_row_up(left, tmp, width_);
                left.assign(tmp.begin(), tmp.end());
                shift_row_down(right, tmp);
                right.assign(tmp.begin(), tmp.end());
                for (std::size_t k = 0; k < wpr_; ++k) dst[k] |= left[k] | right[k];
            }
        }
        std::fill(dilated_.begin(), dilated_.end(), Word{0});
        for (int y = 0; y < height_; ++y) {
            for (int yy = std::max(0, y - options_.tolerance); yy <= std::min(height_ - 1, y + options_.tolerance); ++yy) {
                for (std::size_t k = 0; k < wpr_; ++k) {
                    dilated_[static_cast<std::size_t>(y) * wpr_ + k] |= row_dil[static_cast<std::size_t>(yy) * wpr_ + k];
                }
            }
        }
        match = &dilated_;
    }

    const auto pw = probe.words();
    for (int y = 0; y < height_; ++y) {
        const std::size_t base = static_cast<std::size_t>(y) * wpr_;
        for (std::size_t k = 0; k < wpr_; ++k) {
            Word w = pw[base + k] & (*match)[base + k];
            while (w != 0) {
                const int x = static_cast<int>(k) * kWordBits + std::countr_zero(w);
                ++and_.at(x, y);
                w &= w - 1;
            }
        }
    }

    if (options_.max_disp >= 0) {
        const int d = options_.max_disp;
        const int side = 2 * d + 1;
        probe_events_.clear();
        ref_events_.clear();
        probe.for_each_event([&](int x, int y) { probe_events_.push_back({x, y}); });
        FrameView rot(width_, height_, rotated_);
        rot.for_each_event([&](int x, int y) { ref_events_.push_back({x, y}); });
        for (const Pixel& p : probe_events_) {
            for (const Pixel& r : ref_events_) {
                const int dx = r.x - p.x;
                const int dy = r.y - p.y;
                if (dx < -d || dx > d || dy < -d || dy > d) continue;
                ++pair_counts_[static_cast<std::size_t>(dy + d) * side + (dx + d)];
            }
        }
    }
    probe_.n_frames = ref_.n_frames = and_.n_frames = frames_;
}

void CoincidenceAccumulator::add(const FrameStack& probe, const FrameStack& ref, unsigned workers) {
    check_pair(probe, ref);
    if (probe.width() != width_ || probe.height() != height_) {
        throw AnalysisError("stack dimensions do not match accumulator");
    }
    if (workers == 0) workers = default_workers();
    if (workers <= 1 || probe.size() < 2) {
        for (std::size_t i = 0; i < probe.size(); ++i) add_frame(probe.frame(i), ref.frame(i));
        return;
    }
    std::vector<CoincidenceAccumulator> parts(
        std::min<std::size_t>(workers, probe.size()),
        CoincidenceAccumulator(width_, height_, geometry_, options_));
    parallel_ranges(probe.size(), static_cast<unsigned>(parts.size()),
                    [&](std::size_t begin, std::size_t end, unsigned w) {
                        for (std::size_t i = begin; i < end; ++i) parts[w].add_frame(probe.frame(i), ref.frame(i));
                    });
    for (const auto& p : parts) merge(p);
}

void CoincidenceAccumulator::merge(const CoincidenceAccumulator& other) {
    if (other.width_ != width_ || other.height_ != height_ || !(other.geometry_ == geometry_) ||
        other.options_.tolerance != options_.tolerance || other.options_.max_disp != options_.max_disp) {
        throw AnalysisError("cannot merge accumulators with different configuration");
    }
    probe_ += other.probe_;
    ref_ += other.ref_;
    and_ += other.and_;
    for (std::size_t i = 0; i < pair_counts_.size(); ++i) pair_counts_[i] += other.pair_counts_[i];
    frames_ += other.frames_;
    probe_.n_frames = ref_.n_frames = and_.n_frames = frames_;
}

CountImage CoincidenceAccumulator::rotated_ref_counts() const {
    CountImage out(width_, height_, ImageKind::classical, frames_);
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x) out.at(x, y) = ref_.at(geometry_.center_x2 - x, geometry_.center_y2 - y);
    return out;
}

RealImage CoincidenceAccumulator::baseline() const {
    RealImage out(width_, height_, ImageKind::baseline, frames_);
    if (frames_ == 0) return out;
    const CountImage rref = rotated_ref_counts();
    const double n = static_cast<double>(frames_);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = static_cast<double>(probe_.counts[i]) * static_cast<double>(rref.counts[i]) / n;
    }
    return out;
}

CorrelationMap CoincidenceAccumulator::correlation(CorrelationMethod method) const {
    if (options_.max_disp < 0) throw AnalysisError("accumulator was built without a displacement range");
    const int d = options_.max_disp;
    CorrelationMap map(d, frames_);
    if (frames_ == 0) return map;
    const double n = static_cast<double>(frames_);
    const CountImage rref = rotated_ref_counts();
    std::vector<double> pbar(probe_.counts.size()), rbar(rref.counts.size());
    for (std::size_t i = 0; i < pbar.size(); ++i) {
        pbar[i] = static_cast<double>(probe_.counts[i]) / n;
        rbar[i] = static_cast<double>(rref.counts[i]) / n;
    }
    const std::vector<double> accidental = correlate_images(pbar, rbar, width_, height_, d, method);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        map.values[i] = static_cast<double>(pair_counts_[i]) / n - accidental[i];
    }
    return map;
}

CountImage and_accumulate(const FrameStack& probe, const FrameStack& ref, const CorrelationGeometry& geometry,
                          int tolerance, unsigned workers) {
    check_pair(probe, ref);
    CoincidenceAccumulator acc(probe.width(), probe.height(), geometry, {tolerance, -1});
    acc.add(probe, ref, workers);
    return acc.and_counts();
}

CountImage classical_accumulate(const FrameStack& stack, unsigned workers) {
    const int w = stack.width();
    const int h = stack.height();
    auto accumulate_range = [&](std::size_t begin, std::size_t end) {
        CountImage img(w, h, ImageKind::classical, end - begin);
        for (std::size_t i = begin; i < end; ++i) stack.frame(i).for_each_event([&](int x, int y) { ++img.at(x, y); });
        return img;
    };
    if (workers == 0) workers = default_workers();
    if (workers <= 1 || stack.size() < 2) return accumulate_range(0, stack.size());
    std::vector<CountImage> parts(std::min<std::size_t>(workers, stack.size()));
    parallel_ranges(stack.size(), static_cast<unsigned>(parts.size()),
                    [&](std::size_t begin, std::size_t end, unsigned k) { parts[k] = accumulate_range(begin, end); });
    CountImage out(w, h, ImageKind::classical, 0);
    for (const auto& p : parts) out += p;
    return out;
}

CorrelationMap cross_correlate(const FrameStack& probe, const FrameStack& ref, const CorrelationGeometry& geometry,
                               int max_disp, unsigned workers, CorrelationMethod method) {
    check_pair(probe, ref);
    if (max_disp < 0) throw AnalysisError("max_disp must be >= 0");
    CoincidenceAccumulator acc(probe.width(), probe.height(), geometry, {0, max_disp});
    acc.add(probe, ref, workers);
    return acc.correlation(method);
}

RealImage accidental_baseline(const FrameStack& probe, const FrameStack& ref, const CorrelationGeometry& geometry) {
    check_pair(probe, ref);
    CoincidenceAccumulator acc(probe.width(), probe.height(), geometry);
    acc.add(probe, ref);
    return acc.baseline();
}

std::vector<double> correlate_images(const std::vector<double>& a, const std::vector<double>& b, int width,
                                     int height, int max_disp, CorrelationMethod method) {
    if (method == CorrelationMethod::automatic) {
        const double direct_cost = static_cast<double>(2 * max_disp + 1) * (2 * max_disp + 1) * width * height;
        method = direct_cost > 4.0e6 ? CorrelationMethod::fft : CorrelationMethod::direct;
    }
    return method == CorrelationMethod::fft ? correlate_fft(a, b, width, height, max_disp)
                                            : correlate_direct(a, b, width, height, max_disp);
}

PeakSummary summarize_peak(const CorrelationMap& map, int exclusion) {
    PeakSummary s;
    const int d = map.max_disp;
    s.amplitude = -std::numeric_limits<double>::infinity();
    for (int dy = -d; dy <= d; ++dy) {
        for (int dx = -d; dx <= d; ++dx) {
            if (map.at(dx, dy) > s.amplitude) {
                s.amplitude = map.at(dx, dy);
                s.dx = dx;
                s.dy = dy;
            }
        }
    }
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (int dy = -d; dy <= d; ++dy) {
        for (int dx = -d; dx <= d; ++dx) {
            if (std::max(std::abs(dx - s.dx), std::abs(dy - s.dy)) <= exclusion) continue;
            sum += map.at(dx, dy);
            sum2 += map.at(dx, dy) * map.at(dx, dy);
            ++n;
        }
    }
    s.background_cells = n;
    if (n > 0) {
        s.background_mean = sum / static_cast<double>(n);
        s.background_std = n > 1 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / n) / static_cast<double>(n - 1))) : 0.0;
    }
    s.ratio = s.background_std > 0.0 ? s.amplitude / s.background_std
                                     : std::numeric_limits<double>::infinity();

    double w = 0.0, mx = 0.0, my = 0.0;
    for (int dy = std::max(-d, s.dy - exclusion); dy <= std::min(d, s.dy + exclusion); ++dy) {
        for (int dx = std::max(-d, s.dx - exclusion); dx <= std::min(d, s.dx + exclusion); ++dx) {
            const double v = std::max(0.0, map.at(dx, dy) - s.background_mean);
            w += v;
            mx += v * (dx - s.dx) * (dx - s.dx);
            my += v * (dy - s.dy) * (dy - s.dy);
        }
    }
    if (w > 0.0) {
        s.width_x = std::sqrt(mx / w);
        s.width_y = std::sqrt(my / w);
    }
    return s;
}

std::size_t count_bound_violations(const CountImage& and_image, const CountImage& probe_counts,
                                   const CountImage& ref_counts, const CorrelationGeometry& geometry) {
    require_reflectable(and_image.width, and_image.height, geometry.center_x2, geometry.center_y2);
    std::size_t violations = 0;
    for (int y = 0; y < and_image.height; ++y) {
        for (int x = 0; x < and_image.width; ++x) {
            const std::uint64_t bound =
                std::min(probe_counts.at(x, y), ref_counts.at(geometry.center_x2 - x, geometry.center_y2 - y));
            if (and_image.at(x, y) > bound) ++violations;
        }
    }
    return violations;
}

} // namespace qim
