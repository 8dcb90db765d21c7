#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "qim/frame.hpp"

namespace qim {

/// QIFS frame-stack container, little-endian:
///   "QIFS" | u16 version = 1 | u16 width | u16 height | u64 n_frames
/// followed by n_frames frames, each `height` rows of ceil(width / 8)
/// bytes, pixel x at bit (x % 8) of byte (x / 8). Padding bits are zero.
namespace qifs {

inline constexpr char kMagic[4] = {'Q', 'I', 'F', 'S'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 18;

constexpr std::size_t row_bytes(int width) noexcept { return (static_cast<std::size_t>(width) + 7) / 8; }
constexpr std::size_t frame_bytes(int width, int height) noexcept {
    return row_bytes(width) * static_cast<std::size_t>(height);
}

struct Header {
    int width = 0;
    int height = 0;
    std::uint64_t n_frames = 0;
};

/// Serialized header bytes.
std::vector<std::uint8_t> encode_header(const Header& header);

/// Packs one frame into its on-disk byte layout.
void encode_frame(const FrameView& frame, std::uint8_t* out);

} // namespace qifs

/// Streams frames into a QIFS file. The frame count is fixed up front and
/// checked on close().
class QifsWriter {
public:
    QifsWriter(const std::filesystem::path& path, int width, int height, std::uint64_t n_frames);
    ~QifsWriter();

    QifsWriter(const QifsWriter&) = delete;
    QifsWriter& operator=(const QifsWriter&) = delete;

    void write(const FrameView& frame);
    void write(const FrameStack& stack);
    /// Throws FormatError if fewer frames than declared were written.
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    int width_;
    int height_;
    std::uint64_t declared_;
    std::uint64_t written_ = 0;
    std::vector<std::uint8_t> buffer_;
};

/// Random-access reader; frame offsets follow from the fixed frame size, so
/// separate readers may load disjoint frame ranges concurrently.
class QifsReader {
public:
    /// Validates the header and the exact file length.
    explicit QifsReader(const std::filesystem::path& path);

    const qifs::Header& header() const noexcept { return header_; }
    int width() const noexcept { return header_.width; }
    int height() const noexcept { return header_.height; }
    std::uint64_t size() const noexcept { return header_.n_frames; }

    /// Frames [first, first + count). Throws FormatError on short reads or
    /// non-zero padding bits.
    FrameStack read(std::uint64_t first, std::size_t count);

private:
    std::filesystem::path path_;
    std::ifstream in_;
    qifs::Header header_;
    std::vector<std::uint8_t> buffer_;
};

void write_stack(const FrameStack& stack, const std::filesystem::path& path);
FrameStack read_stack(const std::filesystem::path& path);

} // namespace qim
