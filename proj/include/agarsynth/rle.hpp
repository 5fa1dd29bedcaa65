#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "agarsynth/geometry.hpp"
#include "agarsynth/raster.hpp"

namespace agarsynth {

/// Uncompressed COCO run-length encoding: column-major scan, counts alternate
/// starting with a (possibly zero) run of background pixels.
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const Rle&, const Rle&) = default;
};

/// Encodes pixels > 0.5 as foreground.
Rle rle_encode(const Mask& mask);

/// Encodes a binary mask given in local coordinates, placed at (ox, oy) on a
/// canvas of canvas_w x canvas_h. Pixels falling off the canvas are dropped.
Rle rle_encode_placed(const Mask& mask, int ox, int oy, int canvas_w,
                      int canvas_h);

Mask rle_decode(const Rle& rle);
std::uint64_t rle_area(const Rle& rle);
std::optional<PixelRect> rle_tight_box(const Rle& rle);

}  // namespace agarsynth
