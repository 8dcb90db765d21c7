#include "qim/frame.hpp"

#include <algorithm>
#include <string>

#include "qim/error.hpp"

namespace qim {

namespace {

void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
        throw ValidationError("frame dimensions must be >= 1, got " + std::to_string(width) + "x" +
                              std::to_string(height));
    }
}

} // namespace

std::vector<Pixel> FrameView::events() const {
    std::vector<Pixel> out;
    for_each_event([&](int x, int y) { out.push_back({x, y}); });
    return out;
}

Frame::Frame(int width, int height) : width_(width), height_(height) {
    check_dims(width, height);
    words_.assign(words_per_row(width) * static_cast<std::size_t>(height), 0);
}

Frame::Frame(int width, int height, std::span<const Pixel> events) : Frame(width, height) {
    for (const Pixel& p : events) set(p.x, p.y);
}

bool Frame::test(int x, int y) const {
    if (x < 0 || x >= width_ || y < 0 || y >= height_) return false;
    return view().test(x, y);
}

void Frame::set(int x, int y) {
    if (x < 0 || x >= width_ || y < 0 || y >= height_) {
        throw ValidationError("event (" + std::to_string(x) + ", " + std::to_string(y) +
                              ") outside " + std::to_string(width_) + "x" + std::to_string(height_) +
                              " frame");
    }
    set_unchecked(x, y);
}

void Frame::clear() noexcept { std::fill(words_.begin(), words_.end(), Word{0}); }

Frame to_frame(const FrameView& view) {
    Frame f(view.width(), view.height());
    std::copy(view.words().begin(), view.words().end(), f.words().begin());
    return f;
}

FrameStack::FrameStack(int width, int height, std::size_t n_frames)
    : width_(width), height_(height), n_frames_(n_frames) {
    check_dims(width, height);
    frame_words_ = words_per_row(width) * static_cast<std::size_t>(height);
    words_.assign(frame_words_ * n_frames, 0);
}

FrameView FrameStack::frame(std::size_t i) const {
    return {width_, height_, std::span<const Word>(words_).subspan(i * frame_words_, frame_words_)};
}

std::span<Word> FrameStack::frame_words_mut(std::size_t i) {
    return std::span<Word>(words_).subspan(i * frame_words_, frame_words_);
}

void FrameStack::push_back(const FrameView& frame) {
    if (frame.width() != width_ || frame.height() != height_) {
        throw ValidationError("frame " + std::to_string(frame.width()) + "x" +
                              std::to_string(frame.height()) + " does not match stack " +
                              std::to_string(width_) + "x" + std::to_string(height_));
    }
    words_.insert(words_.end(), frame.words().begin(), frame.words().end());
    ++n_frames_;
}

void FrameStack::reserve(std::size_t n_frames) { words_.reserve(n_frames * frame_words_); }

void FrameStack::resize(std::size_t n_frames) {
    words_.resize(n_frames * frame_words_, 0);
    n_frames_ = n_frames;
}

} // namespace qim
