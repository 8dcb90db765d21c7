#include "qim/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include <png.h>

#include "json.hpp"
#include "qim/error.hpp"

namespace qim {

namespace {

using Kind = FormatError::Kind;

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    for (;;) {
        int c = in.peek();
        while (c != EOF && std::isspace(c)) {
            in.get();
            c = in.peek();
        }
        if (c != '#') break;
        while (c != EOF && c != '\n') c = in.get();
    }
    while (in.peek() != EOF && !std::isspace(in.peek()) && in.peek() != '#') tok.push_back(static_cast<char>(in.get()));
    if (tok.empty()) throw FormatError(Kind::malformed_header, "pgm: truncated header");
    return tok;
}

int parse_positive(const std::string& tok, const char* what) {
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
        tok.size() > 9) {
        throw FormatError(Kind::malformed_header, std::string("pgm: invalid ") + what + " '" + tok + "'");
    }
    const int v = std::stoi(tok);
    if (v < 1) throw FormatError(Kind::malformed_header, std::string("pgm: invalid ") + what + " '" + tok + "'");
    return v;
}

void write_sidecar(const std::filesystem::path& path, Normalization n, double max_value, int maxval, ImageKind kind,
                   std::uint64_t n_frames) {
    nlohmann::json j = {{"image", path.filename().string()},
                        {"normalization", std::string(to_string(n))},
                        {"max_value", max_value},
                        {"maxval", maxval},
                        {"kind", std::string(to_string(kind))},
                        {"n_frames", n_frames}};
    std::ofstream out(path.string() + ".json");
    if (!out) throw FormatError(Kind::io, "cannot write sidecar for " + path.string());
    out << j.dump(2) << '\n';
}

bool is_png(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png";
}

template <class Image>
void write_any(const Image& image, const std::vector<double>& values, const std::filesystem::path& path, Normalization n) {
    const bool png = is_png(path);
    const int maxval = png ? 255 : 65535;
    const GrayImage gray = to_gray(values, image.width, image.height, n, maxval);
    if (png) {
        write_png(gray, path);
    } else {
        write_pgm(gray, path);
    }
    const double max_value = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
    write_sidecar(path, n, max_value, maxval, image.kind, image.n_frames);
}

} // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(Kind::io, "pgm: cannot open " + path.string());
    char magic[2] = {};
    in.read(magic, 2);
    if (in.gcount() != 2 || magic[0] != 'P' || magic[1] != '5') {
        throw FormatError(Kind::malformed_header, "pgm: expected binary P5 magic in " + path.string());
    }
    GrayImage img;
    img.width = parse_positive(pgm_token(in), "width");
    img.height = parse_positive(pgm_token(in), "height");
    img.maxval = parse_positive(pgm_token(in), "maxval");
    // Exactly one whitespace byte separates the header from the raster.
    if (!std::isspace(in.get())) throw FormatError(Kind::malformed_header, "pgm: missing separator after maxval");
    if (img.maxval != 255 && img.maxval != 65535) {
        throw FormatError(Kind::unsupported_maxval,
                          "pgm: unsupported maxval " + std::to_string(img.maxval) + " (expected 255 or 65535)");
    }
    const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    const std::size_t bpp = img.maxval > 255 ? 2 : 1;
    std::vector<std::uint8_t> raw(n * bpp);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw FormatError(Kind::truncated, "pgm: truncated pixel data in " + path.string());
    }
    img.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        img.pixels[i] = bpp == 1 ? raw[i] : static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
        if (img.pixels[i] > img.maxval) throw FormatError(Kind::malformed_header, "pgm: pixel exceeds maxval");
    }
    return img;
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
    if (image.maxval != 255 && image.maxval != 65535) {
        throw FormatError(Kind::unsupported_maxval, "pgm: unsupported maxval " + std::to_string(image.maxval));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(Kind::io, "pgm: cannot open " + path.string() + " for writing");
    out << "P5\n" << image.width << ' ' << image.height << '\n' << image.maxval << '\n';
    std::vector<std::uint8_t> raw;
    raw.reserve(image.pixels.size() * 2);
    for (std::uint16_t v : image.pixels) {
        if (image.maxval > 255) raw.push_back(static_cast<std::uint8_t>(v >> 8));
        raw.push_back(static_cast<std::uint8_t>(v));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw FormatError(Kind::io, "pgm: write failed on " + path.string());
}

void write_png(const GrayImage& image, const std::filesystem::path& path) {
    if (image.maxval != 255) throw FormatError(Kind::unsupported_maxval, "png: only 8-bit output is supported");
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) throw FormatError(Kind::io, "png: cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw FormatError(Kind::io, "png: allocation failed");
    }
    std::vector<std::uint8_t> rows(image.pixels.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint8_t>(image.pixels[i]);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw FormatError(Kind::io, "png: encoding failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) png_write_row(png, rows.data() + static_cast<std::size_t>(y) * image.width);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

GrayImage read_png(const std::filesystem::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
        throw FormatError(Kind::malformed_header, "png: cannot read " + path.string());
    }
    img.format = PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&img);
        throw FormatError(Kind::malformed_header, "png: decode failed for " + path.string());
    }
    GrayImage out;
    out.width = static_cast<int>(img.width);
    out.height = static_cast<int>(img.height);
    out.maxval = 255;
    out.pixels.assign(buf.begin(), buf.end());
    return out;
}

Map2D read_map(const std::filesystem::path& path) {
    const GrayImage g = read_pgm(path);
    Map2D m(g.width, g.height);
    for (std::size_t i = 0; i < g.pixels.size(); ++i) m.values[i] = static_cast<double>(g.pixels[i]) / g.maxval;
    return m;
}

std::string_view to_string(Normalization n) { return n == Normalization::linear ? "linear" : "log"; }

Normalization normalization_from_string(std::string_view s) {
    if (s == "linear") return Normalization::linear;
    if (s == "log") return Normalization::log;
    throw ValidationError("unknown normalization '" + std::string(s) + "'");
}

GrayImage to_gray(const std::vector<double>& values, int width, int height, Normalization n, int maxval) {
    GrayImage g;
    g.width = width;
    g.height = height;
    g.maxval = maxval;
    g.pixels.assign(values.size(), 0);
    const double vmax = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
    if (!(vmax > 0.0)) return g;
    const double denom = n == Normalization::linear ? vmax : std::log1p(vmax);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = std::max(0.0, values[i]);
        const double f = n == Normalization::linear ? v / denom : std::log1p(v) / denom;
        g.pixels[i] = static_cast<std::uint16_t>(std::lround(std::clamp(f, 0.0, 1.0) * maxval));
    }
    return g;
}

void write_image(const CountImage& image, const std::filesystem::path& path, Normalization n) {
    std::vector<double> values(image.counts.begin(), image.counts.end());
    write_any(image, values, path, n);
}

void write_image(const RealImage& image, const std::filesystem::path& path, Normalization n) {
    write_any(image, image.values, path, n);
}

} // namespace qim
