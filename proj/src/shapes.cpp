#include "qim/shapes.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <string>

#include "qim/error.hpp"

namespace qim::shapes {

namespace {

struct Glyph {
    char c;
    std::array<const char*, 7> rows;
};

// clang-format off
constexpr Glyph kFont[] = {
    {'A', {" ### ", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"}},
    {'B', {"#### ", "#   #", "#   #", "#### ", "#   #", "#   #", "#### "}},
    {'C', {" ### ", "#   #", "#    ", "#    ", "#    ", "#   #", " ### "}},
    {'D', {"#### ", "#   #", "#   #", "#   #", "#   #", "#   #", "#### "}},
    {'E', {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#####"}},
    {'F', {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#    "}},
    {'G', {" ### ", "#   #", "#    ", "# ###", "#   #", "#   #", " ####"}},
    {'H', {"#   #", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"}},
    {'I', {" ### ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "}},
    {'J', {"  ###", "   # ", "   # ", "   # ", "   # ", "#  # ", " ##  "}},
    {'K', {"#   #", "#  # ", "# #  ", "##   ", "# #  ", "#  # ", "#   #"}},
    {'L', {"#    ", "#    ", "#    ", "#    ", "#    ", "#    ", "#####"}},
    {'M', {"#   #", "## ##", "# # #", "# # #", "#   #", "#   #", "#   #"}},
    {'N', {"#   #", "#   #", "##  #", "# # #", "#  ##", "#   #", "#   #"}},
    {'O', {" ### ", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "}},
    {'P', {"#### ", "#   #", "#   #", "#### ", "#    ", "#    ", "#    "}},
    {'Q', {" ### ", "#   #", "#   #", "#   #", "# # #", "#  # ", " ## #"}},
    {'R', {"#### ", "#   #", "#   #", "#### ", "# #  ", "#  # ", "#   #"}},
    {'S', {" ####", "#    ", "#    ", " ### ", "    #", "    #", "#### "}},
    {'T', {"#####", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  "}},
    {'U', {"#   #", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "}},
    {'V', {"#   #", "#   #", "#   #", "#   #", "#   #", " # # ", "  #  "}},
    {'W', {"#   #", "#   #", "#   #", "# # #", "# # #", "# # #", " # # "}},
    {'X', {"#   #", "#   #", " # # ", "  #  ", " # # ", "#   #", "#   #"}},
    {'Y', {"#   #", "#   #", " # # ", "  #  ", "  #  ", "  #  ", "  #  "}},
    {'Z', {"#####", "    #", "   # ", "  #  ", " #   ", "#    ", "#####"}},
    {' ', {"     ", "     ", "     ", "     ", "     ", "     ", "     "}},
};
// clang-format on

const Glyph& glyph_for(char c) {
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const Glyph& g : kFont)
        if (g.c == up) return g;
    throw ValidationError(std::string("no glyph for character '") + c + "'");
}

inline void put(Map2D& map, int x, int y, double value) {
    if (x >= 0 && x < map.width && y >= 0 && y < map.height) map.at(x, y) = value;
}

} // namespace

void paint_rect(Map2D& map, int x0, int y0, int w, int h, double value) {
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) put(map, x, y, value);
}

void paint_disk(Map2D& map, double cx, double cy, double radius, double value) {
    paint_ellipse(map, cx, cy, radius, radius, value);
}

void paint_ellipse(Map2D& map, double cx, double cy, double rx, double ry, double value) {
    if (!(rx > 0.0) || !(ry > 0.0)) return;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const double u = (x - cx) / rx;
            const double v = (y - cy) / ry;
            if (u * u + v * v <= 1.0) map.at(x, y) = value;
        }
    }
}

void paint_bars(Map2D& map, bool vertical, int period, int bar_width, int offset, double value) {
    if (period < 1) throw ValidationError("bars period must be >= 1");
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const int c = vertical ? x : y;
            int phase = (c - offset) % period;
            if (phase < 0) phase += period;
            if (phase < bar_width) map.at(x, y) = value;
        }
    }
}

int text_width(std::string_view text, int scale) {
    if (text.empty()) return 0;
    return static_cast<int>(text.size()) * 6 * scale - scale;
}

void paint_text(Map2D& map, std::string_view text, int x0, int y0, int scale, double value) {
    if (scale < 1) throw ValidationError("text scale must be >= 1");
    int pen = x0;
    for (char c : text) {
        const Glyph& g = glyph_for(c);
        for (int gy = 0; gy < 7; ++gy) {
            for (int gx = 0; gx < 5; ++gx) {
                if (g.rows[static_cast<std::size_t>(gy)][gx] != '#') continue;
                for (int sy = 0; sy < scale; ++sy)
                    for (int sx = 0; sx < scale; ++sx) put(map, pen + gx * scale + sx, y0 + gy * scale + sy, value);
            }
        }
        pen += 6 * scale;
    }
}

void paint_bird(Map2D& map, double cx, double cy, double size, double value) {
    // Body, head, tail wedge, raised wing.
    paint_ellipse(map, cx, cy, size, 0.55 * size, value);
    paint_disk(map, cx + 0.95 * size, cy - 0.45 * size, 0.4 * size, value);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const double dx = cx - 0.8 * size - x;
            const double dy = std::abs(y - cy + 0.1 * size);
            if (dx >= 0.0 && dx <= 0.7 * size && dy <= 0.15 * size + 0.5 * dx) map.at(x, y) = value;
        }
    }
    paint_ellipse(map, cx - 0.1 * size, cy - 0.6 * size, 0.45 * size, 0.3 * size, value);
}

} // namespace qim::shapes
