#pragma once

#include <optional>
#include <span>

#include "agarsynth/raster.hpp"

namespace agarsynth {

/// Axis-aligned box, top-left corner plus extent, in pixels.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }
  bool valid() const { return w > 0.0 && h > 0.0; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Integer pixel rectangle [x, x + w) x [y, y + h).
struct PixelRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  bool empty() const { return w <= 0 || h <= 0; }
  BBox to_bbox() const { return {double(x), double(y), double(w), double(h)}; }

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

double intersection_area(const BBox& a, const BBox& b);

/// Open-interior overlap test; rectangles that only touch do not intersect.
bool intersects(const PixelRect& a, const PixelRect& b);

/// Tight bounding rectangle of pixels with value > threshold, or nullopt when
/// no pixel qualifies.
std::optional<PixelRect> tight_box(const Mask& mask, double threshold = 0.5);

/// Smallest integer rectangle enclosing every box.
PixelRect enclosing_rect(std::span<const BBox> boxes);

}  // namespace agarsynth
