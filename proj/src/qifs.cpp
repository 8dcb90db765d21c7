#include "qim/qifs.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>
#include <string>

#include "qim/error.hpp"

namespace qim {

namespace {

using Kind = FormatError::Kind;

void put_u16(std::uint8_t* p, std::uint16_t v) {
    p[0] = static_cast<std::uint8_t>(v);
    p[1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u64(std::uint8_t* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void decode_frame(const std::uint8_t* in, int width, int height, std::span<Word> out, std::uint64_t index) {
    const std::size_t rb = qifs::row_bytes(width);
    const std::size_t wpr = words_per_row(width);
    const int tail = width % 8;
    const std::uint8_t pad_mask = tail == 0 ? 0 : static_cast<std::uint8_t>(0xFFu << tail);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t* row = in + static_cast<std::size_t>(y) * rb;
        if ((row[rb - 1] & pad_mask) != 0) {
            throw FormatError(Kind::nonzero_padding,
                              "qifs: non-zero padding bits in frame " + std::to_string(index) + " row " + std::to_string(y));
        }
        Word* dst = out.data() + static_cast<std::size_t>(y) * wpr;
        if constexpr (std::endian::native == std::endian::little) {
            std::memcpy(dst, row, rb);
        } else {
            for (std::size_t b = 0; b < rb; ++b) dst[b / 8] |= static_cast<Word>(row[b]) << (8 * (b % 8));
        }
    }
}

} // namespace

namespace qifs {

std::vector<std::uint8_t> encode_header(const Header& h) {
    std::vector<std::uint8_t> out(kHeaderBytes);
    std::memcpy(out.data(), kMagic, 4);
    put_u16(out.data() + 4, kVersion);
    put_u16(out.data() + 6, static_cast<std::uint16_t>(h.width));
    put_u16(out.data() + 8, static_cast<std::uint16_t>(h.height));
    put_u64(out.data() + 10, h.n_frames);
    return out;
}

void encode_frame(const FrameView& frame, std::uint8_t* out) {
    const std::size_t rb = row_bytes(frame.width());
    for (int y = 0; y < frame.height(); ++y) {
        const auto row = frame.row(y);
        std::uint8_t* dst = out + static_cast<std::size_t>(y) * rb;
        for (std::size_t b = 0; b < rb; ++b) dst[b] = static_cast<std::uint8_t>(row[b / 8] >> (8 * (b % 8)));
    }
}

} // namespace qifs

QifsWriter::QifsWriter(const std::filesystem::path& path, int width, int height, std::uint64_t n_frames)
    : path_(path), width_(width), height_(height), declared_(n_frames) {
    if (width < 1 || height < 1) throw FormatError(Kind::invalid_dimensions, "qifs: dimensions must be >= 1");
    if (width > 0xFFFF || height > 0xFFFF) {
        throw FormatError(Kind::dimension_overflow, "qifs: dimensions exceed 65535");
    }
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw FormatError(Kind::io, "qifs: cannot open " + path.string() + " for writing");
    const auto header = qifs::encode_header({width, height, n_frames});
    out_.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
    buffer_.resize(qifs::frame_bytes(width, height));
}

QifsWriter::~QifsWriter() {
    if (out_.is_open()) out_.close();
}

void QifsWriter::write(const FrameView& frame) {
    if (frame.width() != width_ || frame.height() != height_) {
        throw FormatError(Kind::invalid_dimensions, "qifs: frame size does not match file header");
    }
    if (written_ == declared_) throw FormatError(Kind::trailing_data, "qifs: more frames than declared");
    qifs::encode_frame(frame, buffer_.data());
    out_.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
    if (!out_) throw FormatError(Kind::io, "qifs: write failed on " + path_.string());
    ++written_;
}

void QifsWriter::write(const FrameStack& stack) {
    for (std::size_t i = 0; i < stack.size(); ++i) write(stack.frame(i));
}

void QifsWriter::close() {
    if (!out_.is_open()) return;
    out_.close();
    if (!out_) throw FormatError(Kind::io, "qifs: close failed on " + path_.string());
    if (written_ != declared_) {
        throw FormatError(Kind::truncated, "qifs: wrote " + std::to_string(written_) + " of " +
                                               std::to_string(declared_) + " declared frames");
    }
}

QifsReader::QifsReader(const std::filesystem::path& path) : path_(path) {
    in_.open(path, std::ios::binary);
    if (!in_) throw FormatError(Kind::io, "qifs: cannot open " + path.string());
    in_.seekg(0, std::ios::end);
    const auto file_size = static_cast<std::uint64_t>(in_.tellg());
    in_.seekg(0, std::ios::beg);

    std::uint8_t h[qifs::kHeaderBytes] = {};
    in_.read(reinterpret_cast<char*>(h), static_cast<std::streamsize>(std::min<std::uint64_t>(file_size, sizeof h)));
    if (file_size >= 4 && std::memcmp(h, qifs::kMagic, 4) != 0) {
        throw FormatError(Kind::bad_magic, "qifs: bad magic (expected \"QIFS\")");
    }
    if (file_size < qifs::kHeaderBytes) throw FormatError(Kind::truncated, "qifs: truncated header");
    const std::uint16_t version = get_u16(h + 4);
    if (version != qifs::kVersion) {
        throw FormatError(Kind::version_mismatch,
                          "qifs: unsupported version " + std::to_string(version) + " (expected 1)");
    }
    header_.width = get_u16(h + 6);
    header_.height = get_u16(h + 8);
    header_.n_frames = get_u64(h + 10);
    if (header_.width == 0 || header_.height == 0) {
        throw FormatError(Kind::invalid_dimensions, "qifs: zero width or height");
    }
    const std::uint64_t fb = qifs::frame_bytes(header_.width, header_.height);
    if (header_.n_frames > (std::numeric_limits<std::uint64_t>::max() - qifs::kHeaderBytes) / fb ||
        header_.n_frames > std::numeric_limits<std::size_t>::max() / (words_per_row(header_.width) * 8 * header_.height)) {
        throw FormatError(Kind::dimension_overflow, "qifs: frame count " + std::to_string(header_.n_frames) +
                                                        " overflows the addressable size");
    }
    const std::uint64_t expected = qifs::kHeaderBytes + header_.n_frames * fb;
    if (file_size < expected) {
        throw FormatError(Kind::truncated, "qifs: truncated file (" + std::to_string(file_size) + " bytes, expected " +
                                               std::to_string(expected) + ")");
    }
    if (file_size > expected) {
        throw FormatError(Kind::trailing_data, "qifs: " + std::to_string(file_size - expected) +
                                                   " trailing bytes after last frame");
    }
}

FrameStack QifsReader::read(std::uint64_t first, std::size_t count) {
    if (first > header_.n_frames || count > header_.n_frames - first) {
        throw FormatError(Kind::truncated, "qifs: frame range beyond end of file");
    }
    const std::size_t fb = qifs::frame_bytes(header_.width, header_.height);
    FrameStack stack(header_.width, header_.height, count);
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(qifs::kHeaderBytes + first * fb));
    constexpr std::size_t kBlockFrames = 8192;
    buffer_.resize(std::min(count, kBlockFrames) * fb);
    for (std::size_t done = 0; done < count;) {
        const std::size_t n = std::min(kBlockFrames, count - done);
        in_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(n * fb));
        if (static_cast<std::size_t>(in_.gcount()) != n * fb) {
            throw FormatError(Kind::truncated, "qifs: short read in " + path_.string());
        }
        for (std::size_t i = 0; i < n; ++i) {
            decode_frame(buffer_.data() + i * fb, header_.width, header_.height, stack.frame_words_mut(done + i),
                         first + done + i);
        }
        done += n;
    }
    return stack;
}

void write_stack(const FrameStack& stack, const std::filesystem::path& path) {
    QifsWriter w(path, stack.width(), stack.height(), stack.size());
    w.write(stack);
    w.close();
}

FrameStack read_stack(const std::filesystem::path& path) {
    QifsReader r(path);
    return r.read(0, static_cast<std::size_t>(r.size()));
}

} // namespace qim
