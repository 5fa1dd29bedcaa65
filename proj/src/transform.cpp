#include "agarsynth/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace agarsynth {

namespace {

// Normalized angle in [0, 360).
double normalize_angle(double angle) {
  double a = std::fmod(angle, 360.0);
  if (a < 0.0) a += 360.0;
  return a;
}

int quarter_turns(double angle) {
  const double a = normalize_angle(angle);
  if (a == 0.0) return 0;
  if (a == 90.0) return 1;
  if (a == 180.0) return 2;
  if (a == 270.0) return 3;
  return -1;
}

template <typename T>
Raster<T> rotate_quarter(const Raster<T>& in, int turns) {
  const int w = in.width(), h = in.height();
  if (turns == 0) return in;
  if (turns == 2) {
    Raster<T> out(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(x, y) = in.at(w - 1 - x, h - 1 - y);
    return out;
  }
  Raster<T> out(h, w);
  for (int y = 0; y < w; ++y) {
    for (int x = 0; x < h; ++x) {
      out.at(x, y) = turns == 1 ? in.at(w - 1 - y, x) : in.at(y, h - 1 - x);
    }
  }
  return out;
}

template <typename T>
Raster<T> apply_flips(Raster<T> img, bool flip_h, bool flip_v) {
  const int w = img.width(), h = img.height();
  if (flip_h) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w / 2; ++x) std::swap(img.at(x, y), img.at(w - 1 - x, y));
  }
  if (flip_v) {
    for (int y = 0; y < h / 2; ++y)
      for (int x = 0; x < w; ++x) std::swap(img.at(x, y), img.at(x, h - 1 - y));
  }
  return img;
}

// Maps output pixel centers back into source pixel coordinates.
struct InverseRotation {
  double cos_t, sin_t;
  double src_cx, src_cy, dst_cx, dst_cy;

  InverseRotation(int sw, int sh, int dw, int dh, double angle) {
    const double rad = angle * std::numbers::pi / 180.0;
    cos_t = std::cos(rad);
    sin_t = std::sin(rad);
    src_cx = sw / 2.0;
    src_cy = sh / 2.0;
    dst_cx = dw / 2.0;
    dst_cy = dh / 2.0;
  }

  // Returns source coordinates with pixel centers on integers.
  std::pair<double, double> operator()(int x, int y) const {
    const double u = x + 0.5 - dst_cx, v = y + 0.5 - dst_cy;
    return {u * cos_t - v * sin_t + src_cx - 0.5,
            u * sin_t + v * cos_t + src_cy - 0.5};
  }
};

struct Premultiplied {
  double r = 0, g = 0, b = 0, a = 0;
};

Premultiplied sample_premultiplied(const RgbaFragment& f, double sx, double sy) {
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0, fy = sy - y0;
  Premultiplied acc;
  const int xs[2] = {x0, x0 + 1};
  const int ys[2] = {y0, y0 + 1};
  const double wx[2] = {1.0 - fx, fx};
  const double wy[2] = {1.0 - fy, fy};
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      if (!f.alpha.contains(xs[i], ys[j])) continue;
      const double w = wx[i] * wy[j];
      const double a = f.alpha.at(xs[i], ys[j]);
      const Rgb& c = f.color.at(xs[i], ys[j]);
      acc.r += w * a * c.r;
      acc.g += w * a * c.g;
      acc.b += w * a * c.b;
      acc.a += w * a;
    }
  }
  return acc;
}

void store(RgbaFragment& out, int x, int y, const Premultiplied& p) {
  const double a = std::clamp(p.a, 0.0, 1.0);
  out.alpha.at(x, y) = a;
  if (p.a > 0.0) {
    out.color.at(x, y) = {std::clamp(p.r / p.a, 0.0, 1.0),
                          std::clamp(p.g / p.a, 0.0, 1.0),
                          std::clamp(p.b / p.a, 0.0, 1.0)};
  }
}

template <typename Map>
Mask nearest_mask(const Mask& mask, int dw, int dh, const Map& to_src) {
  Mask out(dw, dh);
  bool any = false;
  for (int y = 0; y < dh; ++y) {
    for (int x = 0; x < dw; ++x) {
      const auto [sx, sy] = to_src(x, y);
      const int ix = static_cast<int>(std::floor(sx + 0.5));
      const int iy = static_cast<int>(std::floor(sy + 0.5));
      if (mask.contains(ix, iy) && mask.at(ix, iy) > 0.5) {
        out.at(x, y) = 1.0;
        any = true;
      }
    }
  }
  if (any || count_above(mask, 0.5) == 0 || out.empty()) return out;

  // Keep the output pixel whose preimage is closest to the mask centroid.
  double cx = 0, cy = 0, n = 0;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y) > 0.5) cx += x, cy += y, n += 1;
  cx /= n;
  cy /= n;
  int bx = 0, by = 0;
  double best = INFINITY;
  for (int y = 0; y < dh; ++y) {
    for (int x = 0; x < dw; ++x) {
      const auto [sx, sy] = to_src(x, y);
      const double d = (sx - cx) * (sx - cx) + (sy - cy) * (sy - cy);
      if (d < best) best = d, bx = x, by = y;
    }
  }
  out.at(bx, by) = 1.0;
  return out;
}

}  // namespace

std::pair<int, int> rotated_extent(int width, int height, double angle) {
  const int turns = quarter_turns(angle);
  if (turns == 0 || turns == 2) return {width, height};
  if (turns == 1 || turns == 3) return {height, width};
  const double rad = normalize_angle(angle) * std::numbers::pi / 180.0;
  const double c = std::abs(std::cos(rad)), s = std::abs(std::sin(rad));
  const int w = static_cast<int>(std::ceil(width * c + height * s - 1e-9));
  const int h = static_cast<int>(std::ceil(width * s + height * c - 1e-9));
  return {std::max(w, 1), std::max(h, 1)};
}

RgbaFragment rotate_flip_rgba(const RgbaFragment& frag, const RotateFlip& t) {
  require_same_shape(frag.color, frag.alpha, "rotate_flip_rgba");
  RgbaFragment out;
  const int turns = quarter_turns(t.angle);
  if (turns >= 0) {
    out.color = rotate_quarter(frag.color, turns);
    out.alpha = rotate_quarter(frag.alpha, turns);
  } else {
    const auto [dw, dh] = rotated_extent(frag.width(), frag.height(), t.angle);
    const InverseRotation to_src(frag.width(), frag.height(), dw, dh,
                                 normalize_angle(t.angle));
    out.color = ImageRGB(dw, dh);
    out.alpha = Mask(dw, dh);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < dh; ++y) {
      for (int x = 0; x < dw; ++x) {
        const auto [sx, sy] = to_src(x, y);
        store(out, x, y, sample_premultiplied(frag, sx, sy));
      }
    }
  }
  out.color = apply_flips(std::move(out.color), t.flip_h, t.flip_v);
  out.alpha = apply_flips(std::move(out.alpha), t.flip_h, t.flip_v);
  return out;
}

Mask rotate_flip_mask(const Mask& mask, const RotateFlip& t) {
  Mask out;
  const int turns = quarter_turns(t.angle);
  if (turns >= 0) {
    out = rotate_quarter(mask, turns);
  } else {
    const auto [dw, dh] = rotated_extent(mask.width(), mask.height(), t.angle);
    const InverseRotation to_src(mask.width(), mask.height(), dw, dh,
                                 normalize_angle(t.angle));
    out = nearest_mask(mask, dw, dh, to_src);
  }
  return apply_flips(std::move(out), t.flip_h, t.flip_v);
}

RgbaFragment scale_rgba(const RgbaFragment& frag, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be > 0");
  const int dw = std::max(1, static_cast<int>(std::lround(frag.width() * factor)));
  const int dh = std::max(1, static_cast<int>(std::lround(frag.height() * factor)));
  const double sx = double(frag.width()) / dw, sy = double(frag.height()) / dh;
  RgbaFragment out{ImageRGB(dw, dh), Mask(dw, dh)};
  for (int y = 0; y < dh; ++y) {
    for (int x = 0; x < dw; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, frag.width() - 1.0);
      const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, frag.height() - 1.0);
      store(out, x, y, sample_premultiplied(frag, fx, fy));
    }
  }
  return out;
}

Mask scale_mask(const Mask& mask, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be > 0");
  const int dw = std::max(1, static_cast<int>(std::lround(mask.width() * factor)));
  const int dh = std::max(1, static_cast<int>(std::lround(mask.height() * factor)));
  const double sx = double(mask.width()) / dw, sy = double(mask.height()) / dh;
  return nearest_mask(mask, dw, dh, [&](int x, int y) {
    return std::pair<double, double>{(x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5};
  });
}

Rgb sample_bilinear(const ImageRGB& img, double x, double y) {
  const double cx = std::clamp(x, 0.0, img.width() - 1.0);
  const double cy = std::clamp(y, 0.0, img.height() - 1.0);
  const int x0 = static_cast<int>(std::floor(cx));
  const int y0 = static_cast<int>(std::floor(cy));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = cx - x0, fy = cy - y0;
  const Rgb& p00 = img.at(x0, y0);
  const Rgb& p10 = img.at(x1, y0);
  const Rgb& p01 = img.at(x0, y1);
  const Rgb& p11 = img.at(x1, y1);
  auto lerp2 = [&](double a, double b, double c, double d) {
    return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
  };
  return {lerp2(p00.r, p10.r, p01.r, p11.r), lerp2(p00.g, p10.g, p01.g, p11.g),
          lerp2(p00.b, p10.b, p01.b, p11.b)};
}

}  // namespace agarsynth
