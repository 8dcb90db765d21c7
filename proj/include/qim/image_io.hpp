#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "qim/model.hpp"

namespace qim {

/// Raw grayscale raster as stored on disk.
struct GrayImage {
    int width = 0;
    int height = 0;
    int maxval = 255;
    std::vector<std::uint16_t> pixels;
};

/// Binary PGM (P5) with maxval 255 or 65535; other maxvals are rejected.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

/// 8-bit grayscale PNG.
void write_png(const GrayImage& image, const std::filesystem::path& path);
GrayImage read_png(const std::filesystem::path& path);

/// PGM scaled to [0, 1] by value / maxval.
Map2D read_map(const std::filesystem::path& path);

enum class Normalization { linear, log };

std::string_view to_string(Normalization n);
Normalization normalization_from_string(std::string_view s);

/// Maps counts to gray levels with max -> maxval (linear: c / max,
/// log: log1p(c) / log1p(max)). An all-zero image maps to black.
GrayImage to_gray(const std::vector<double>& values, int width, int height, Normalization n, int maxval);

/// Writes a PGM (16-bit) or PNG (8-bit) chosen by extension and a sidecar
/// `<path>.json` recording the normalization, maximum and image kind.
void write_image(const CountImage& image, const std::filesystem::path& path, Normalization n = Normalization::linear);
void write_image(const RealImage& image, const std::filesystem::path& path, Normalization n = Normalization::linear);

} // namespace qim
