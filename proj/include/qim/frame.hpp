#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qim {

struct Pixel {
    int x = 0;
    int y = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

using Word = std::uint64_t;
inline constexpr int kWordBits = 64;

constexpr std::size_t words_per_row(int width) noexcept {
    return (static_cast<std::size_t>(width) + kWordBits - 1) / kWordBits;
}

/// Read-only view of one binary event frame. Rows are bit-packed, 64 pixels
/// per word, pixel x of a row at bit (x % 64) of word (x / 64). Padding bits
/// beyond `width` are always zero.
class FrameView {
public:
    FrameView(int width, int height, std::span<const Word> words) noexcept
        : width_(width), height_(height), wpr_(words_per_row(width)), words_(words) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t row_words() const noexcept { return wpr_; }
    std::span<const Word> words() const noexcept { return words_; }
    std::span<const Word> row(int y) const noexcept {
        return words_.subspan(static_cast<std::size_t>(y) * wpr_, wpr_);
    }

    bool test(int x, int y) const noexcept {
        const Word w = words_[static_cast<std::size_t>(y) * wpr_ + static_cast<std::size_t>(x) / kWordBits];
        return (w >> (x % kWordBits)) & 1U;
    }

    std::size_t event_count() const noexcept {
        std::size_t n = 0;
        for (Word w : words_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }

    /// Calls fn(x, y) for each event in row-major order.
    template <class Fn>
    void for_each_event(Fn&& fn) const {
        for (int y = 0; y < height_; ++y) {
            const std::size_t base = static_cast<std::size_t>(y) * wpr_;
            for (std::size_t k = 0; k < wpr_; ++k) {
                Word w = words_[base + k];
                while (w != 0) {
                    const int bit = std::countr_zero(w);
                    fn(static_cast<int>(k) * kWordBits + bit, y);
                    w &= w - 1;
                }
            }
        }
    }

    std::vector<Pixel> events() const;

private:
    int width_;
    int height_;
    std::size_t wpr_;
    std::span<const Word> words_;
};

/// Owning binary event frame.
class Frame {
public:
    Frame() = default;
    Frame(int width, int height);
    /// Throws ValidationError when an event lies outside the frame.
    Frame(int width, int height, std::span<const Pixel> events);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::span<const Word> words() const noexcept { return words_; }
    std::span<Word> words() noexcept { return words_; }

    FrameView view() const noexcept { return {width_, height_, words_}; }
    operator FrameView() const noexcept { return view(); }

    bool test(int x, int y) const;
    /// Sets an event; a pixel holds at most one. Throws on out-of-bounds.
    void set(int x, int y);
    void set_unchecked(int x, int y) noexcept {
        words_[static_cast<std::size_t>(y) * words_per_row(width_) + static_cast<std::size_t>(x) / kWordBits] |=
            Word{1} << (x % kWordBits);
    }
    void clear() noexcept;

    std::size_t event_count() const noexcept { return view().event_count(); }
    std::vector<Pixel> events() const { return view().events(); }

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Word> words_;
};

Frame to_frame(const FrameView& view);

/// Ordered sequence of equally-sized frames in one contiguous bit buffer.
class FrameStack {
public:
    FrameStack() = default;
    FrameStack(int width, int height, std::size_t n_frames = 0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return n_frames_; }
    bool empty() const noexcept { return n_frames_ == 0; }
    std::size_t frame_words() const noexcept { return frame_words_; }

    FrameView frame(std::size_t i) const;
    FrameView operator[](std::size_t i) const { return frame(i); }
    std::span<Word> frame_words_mut(std::size_t i);

    /// Throws ValidationError if dimensions differ.
    void push_back(const FrameView& frame);
    void reserve(std::size_t n_frames);
    void resize(std::size_t n_frames);

    std::span<const Word> data() const noexcept { return words_; }

    friend bool operator==(const FrameStack&, const FrameStack&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::size_t n_frames_ = 0;
    std::size_t frame_words_ = 0;
    std::vector<Word> words_;
};

} // namespace qim
