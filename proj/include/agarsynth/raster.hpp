#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace agarsynth {

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const Lab&, const Lab&) = default;
};

// Row-major 2D buffer. Index (x, y) maps to y * width + x.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw std::invalid_argument("raster dimensions must be non-negative");
    }
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  T& at(int x, int y) { return pixels_[index(x, y)]; }
  const T& at(int x, int y) const { return pixels_[index(x, y)]; }

  T& operator[](std::size_t i) { return pixels_[i]; }
  const T& operator[](std::size_t i) const { return pixels_[i]; }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::vector<T>& pixels() { return pixels_; }
  const std::vector<T>& pixels() const { return pixels_; }

  template <typename U>
  bool same_shape(const Raster<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> pixels_;
};

/// sRGB image with channels in [0, 1].
using ImageRGB = Raster<Rgb>;
/// CIELab image, L in [0, 100].
using ImageLab = Raster<Lab>;
/// Per-pixel weight in [0, 1]; binary masks hold only 0 and 1.
using Mask = Raster<double>;

/// Color plus alpha of identical dimensions.
struct RgbaFragment {
  ImageRGB color;
  Mask alpha;

  int width() const { return color.width(); }
  int height() const { return color.height(); }

  friend bool operator==(const RgbaFragment&, const RgbaFragment&) = default;
};

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b,
                        const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.width()) + "x" +
                                std::to_string(a.height()) + " vs " +
                                std::to_string(b.width()) + "x" +
                                std::to_string(b.height()) + ")");
  }
}

bool is_valid(const ImageRGB& img);
bool is_valid(const Mask& mask);
bool is_binary(const Mask& mask);

/// Number of pixels with value > threshold.
std::size_t count_above(const Mask& mask, double threshold = 0.0);

/// Luminance-like scalar view of one Lab channel.
Mask lab_channel(const ImageLab& img, int channel);

}  // namespace agarsynth
