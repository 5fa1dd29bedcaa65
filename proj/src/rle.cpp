#include "agarsynth/rle.hpp"

#include <algorithm>
#include <stdexcept>

namespace agarsynth {

namespace {

// Feeds column-major foreground flags into alternating runs.
class RunBuilder {
 public:
  void push(bool fg, std::uint32_t n = 1) {
    if (n == 0) return;
    if (fg != current_) {
      counts_.push_back(run_);
      run_ = 0;
      current_ = fg;
    }
    run_ += n;
  }
  std::vector<std::uint32_t> finish() {
    counts_.push_back(run_);
    return std::move(counts_);
  }

 private:
  std::vector<std::uint32_t> counts_;
  std::uint32_t run_ = 0;
  bool current_ = false;
};

}  // namespace

Rle rle_encode(const Mask& mask) {
  return rle_encode_placed(mask, 0, 0, mask.width(), mask.height());
}

Rle rle_encode_placed(const Mask& mask, int ox, int oy, int canvas_w,
                      int canvas_h) {
  RunBuilder runs;
  for (int x = 0; x < canvas_w; ++x) {
    const int lx = x - ox;
    if (lx < 0 || lx >= mask.width()) {
      runs.push(false, static_cast<std::uint32_t>(canvas_h));
      continue;
    }
    for (int y = 0; y < canvas_h; ++y) {
      const int ly = y - oy;
      runs.push(ly >= 0 && ly < mask.height() && mask.at(lx, ly) > 0.5);
    }
  }
  return {canvas_h, canvas_w, runs.finish()};
}

Mask rle_decode(const Rle& rle) {
  Mask out(rle.width, rle.height);
  std::uint64_t pos = 0;
  const std::uint64_t total = static_cast<std::uint64_t>(rle.width) * rle.height;
  bool fg = false;
  for (std::uint32_t run : rle.counts) {
    if (pos + run > total) throw std::invalid_argument("RLE counts exceed mask size");
    if (fg) {
      for (std::uint64_t p = pos; p < pos + run; ++p) {
        const int x = static_cast<int>(p / rle.height);
        const int y = static_cast<int>(p % rle.height);
        out.at(x, y) = 1.0;
      }
    }
    pos += run;
    fg = !fg;
  }
  if (pos != total) throw std::invalid_argument("RLE counts do not cover mask");
  return out;
}

std::uint64_t rle_area(const Rle& rle) {
  std::uint64_t area = 0;
  for (std::size_t i = 1; i < rle.counts.size(); i += 2) area += rle.counts[i];
  return area;
}

std::optional<PixelRect> rle_tight_box(const Rle& rle) {
  if (rle.height <= 0) return std::nullopt;
  std::uint64_t pos = 0;
  int x0 = rle.width, y0 = rle.height, x1 = -1, y1 = -1;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    const std::uint64_t run = rle.counts[i];
    if (i % 2 == 1 && run > 0) {
      const std::uint64_t first = pos, last = pos + run - 1;
      const int cx0 = static_cast<int>(first / rle.height);
      const int cx1 = static_cast<int>(last / rle.height);
      x0 = std::min(x0, cx0);
      x1 = std::max(x1, cx1);
      if (cx0 != cx1) {
        // Run spans a column boundary, so it touches both the top and bottom.
        y0 = 0;
        y1 = rle.height - 1;
      } else {
        y0 = std::min(y0, static_cast<int>(first % rle.height));
        y1 = std::max(y1, static_cast<int>(last % rle.height));
      }
    }
    pos += run;
  }
  if (x1 < 0) return std::nullopt;
  return PixelRect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

}  // namespace agarsynth
