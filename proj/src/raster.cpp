#include "agarsynth/raster.hpp"

#include <algorithm>
#include <cmath>

#include "agarsynth/geometry.hpp"

namespace agarsynth {

namespace {

bool unit_range(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace

bool is_valid(const ImageRGB& img) {
  if (img.width() < 1 || img.height() < 1) return false;
  return std::all_of(img.pixels().begin(), img.pixels().end(), [](const Rgb& p) {
    return unit_range(p.r) && unit_range(p.g) && unit_range(p.b);
  });
}

bool is_valid(const Mask& mask) {
  return std::all_of(mask.pixels().begin(), mask.pixels().end(), unit_range);
}

bool is_binary(const Mask& mask) {
  return std::all_of(mask.pixels().begin(), mask.pixels().end(),
                     [](double v) { return v == 0.0 || v == 1.0; });
}

std::size_t count_above(const Mask& mask, double threshold) {
  return static_cast<std::size_t>(
      std::count_if(mask.pixels().begin(), mask.pixels().end(),
                    [threshold](double v) { return v > threshold; }));
}

Mask lab_channel(const ImageLab& img, int channel) {
  Mask out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const Lab& p = img[i];
    out[i] = channel == 0 ? p.l : (channel == 1 ? p.a : p.b);
  }
  return out;
}

double intersection_area(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

bool intersects(const PixelRect& a, const PixelRect& b) {
  return a.x < b.right() && b.x < a.right() && a.y < b.bottom() &&
         b.y < a.bottom();
}

std::optional<PixelRect> tight_box(const Mask& mask, double threshold) {
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y) > threshold) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) return std::nullopt;
  return PixelRect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

PixelRect enclosing_rect(std::span<const BBox> boxes) {
  if (boxes.empty()) return {};
  double x0 = boxes[0].x, y0 = boxes[0].y;
  double x1 = boxes[0].right(), y1 = boxes[0].bottom();
  for (const BBox& b : boxes.subspan(1)) {
    x0 = std::min(x0, b.x);
    y0 = std::min(y0, b.y);
    x1 = std::max(x1, b.right());
    y1 = std::max(y1, b.bottom());
  }
  const int ix0 = static_cast<int>(std::floor(x0));
  const int iy0 = static_cast<int>(std::floor(y0));
  const int ix1 = static_cast<int>(std::ceil(x1));
  const int iy1 = static_cast<int>(std::ceil(y1));
  return {ix0, iy0, ix1 - ix0, iy1 - iy0};
}

}  // namespace agarsynth
