#pragma once

#include <string_view>

#include "qim/model.hpp"

namespace qim::shapes {

// Painters set `value` on covered pixels and leave the rest untouched, so
// test objects can be layered onto a background map.

void paint_rect(Map2D& map, int x0, int y0, int w, int h, double value);
void paint_disk(Map2D& map, double cx, double cy, double radius, double value);
void paint_ellipse(Map2D& map, double cx, double cy, double rx, double ry, double value);

/// Parallel bars ("cage"): pixels whose coordinate across the bars satisfies
/// (c - offset) mod period < bar_width.
void paint_bars(Map2D& map, bool vertical, int period, int bar_width, int offset, double value);

/// 5x7 block capitals scaled by `scale`, one blank column between glyphs.
/// Throws ValidationError for characters without a glyph.
void paint_text(Map2D& map, std::string_view text, int x0, int y0, int scale, double value);

/// Width in pixels of `text` rendered at `scale`.
int text_width(std::string_view text, int scale);

/// Simple bird silhouette (body, head, tail, wing) centred at (cx, cy) with
/// body half-length `size`.
void paint_bird(Map2D& map, double cx, double cy, double size, double value);

} // namespace qim::shapes
