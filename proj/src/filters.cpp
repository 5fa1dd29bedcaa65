#include "agarsynth/filters.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace agarsynth {

namespace {

// Offsets (dx, dy) of the discretized disk, row-major.
std::vector<std::pair<int, int>> disk_offsets(double radius) {
  std::vector<std::pair<int, int>> offsets;
  const int r = static_cast<int>(std::floor(radius));
  const double r2 = radius * radius;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= r2) offsets.emplace_back(dx, dy);
    }
  }
  return offsets;
}

template <typename T>
T scale_add(const T& acc, double w, const T& v);

template <>
double scale_add(const double& acc, double w, const double& v) {
  return acc + w * v;
}

template <>
Rgb scale_add(const Rgb& acc, double w, const Rgb& v) {
  return {acc.r + w * v.r, acc.g + w * v.g, acc.b + w * v.b};
}

template <typename T>
Raster<T> separable_blur(const Raster<T>& img, double sigma) {
  const std::vector<double> taps = gaussian_kernel(sigma);
  const int half = static_cast<int>(taps.size() / 2);
  const int w = img.width(), h = img.height();
  Raster<T> tmp(w, h), out(w, h);

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      T acc{};
      for (int k = -half; k <= half; ++k) {
        const int sx = std::clamp(x + k, 0, w - 1);
        acc = scale_add(acc, taps[k + half], img.at(sx, y));
      }
      tmp.at(x, y) = acc;
    }
  }

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      T acc{};
      for (int k = -half; k <= half; ++k) {
        const int sy = std::clamp(y + k, 0, h - 1);
        acc = scale_add(acc, taps[k + half], tmp.at(x, sy));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

}  // namespace

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian sigma must be > 0");
  const int half = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * half + 1);
  double sum = 0.0;
  for (int k = -half; k <= half; ++k) {
    taps[k + half] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    sum += taps[k + half];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

ImageRGB gaussian_blur(const ImageRGB& img, double sigma) {
  return separable_blur(img, sigma);
}

Mask gaussian_blur(const Mask& img, double sigma) {
  return separable_blur(img, sigma);
}

ImageRGB unsharp_mask(const ImageRGB& img, double radius, double amount) {
  if (!(radius > 0.0)) throw std::invalid_argument("unsharp radius must be > 0");
  if (amount < 0.0) throw std::invalid_argument("unsharp amount must be >= 0");
  if (amount == 0.0) return img;
  const ImageRGB blurred = gaussian_blur(img, radius);
  ImageRGB out(img.width(), img.height());
  auto sharpen = [amount](double v, double b) {
    return std::clamp(v + amount * (v - b), 0.0, 1.0);
  };
  const auto n = static_cast<std::ptrdiff_t>(img.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = {sharpen(img[i].r, blurred[i].r), sharpen(img[i].g, blurred[i].g),
              sharpen(img[i].b, blurred[i].b)};
  }
  return out;
}

Mask dilate(const Mask& mask, double radius) {
  if (radius < 0.0) throw std::invalid_argument("dilation radius must be >= 0");
  // Half-width of the disk row at each dy.
  const int r = static_cast<int>(std::floor(radius));
  std::vector<int> span(2 * r + 1, -1);
  for (const auto& [dx, dy] : disk_offsets(radius)) span[dy + r] = std::max(span[dy + r], dx);
  const int w = mask.width(), h = mask.height();
  Mask out(w, h);
  // Each output row scatters from the source rows that reach it.
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int dy = -r; dy <= r; ++dy) {
      const int sy = y - dy, a = span[dy + r];
      if (sy < 0 || sy >= h || a < 0) continue;
      for (int x = 0; x < w; ++x) {
        const double v = mask.at(x, sy);
        if (v <= 0.0) continue;
        for (int ox = std::max(0, x - a); ox <= std::min(w - 1, x + a); ++ox) {
          double& o = out.at(ox, y);
          o = std::max(o, v);
        }
      }
    }
  }
  return out;
}

ImageRGB nl_means_denoise(const ImageRGB& img, const NlMeansParams& params) {
  if (params.patch < 1 || params.patch % 2 == 0 || params.window < 1 ||
      params.window % 2 == 0) {
    throw std::invalid_argument("nl-means patch and window must be odd");
  }
  if (!(params.h > 0.0)) throw std::invalid_argument("nl-means h must be > 0");

  const int w = img.width(), h = img.height();
  const int hp = params.patch / 2;
  const int hw = params.window / 2;
  const int pad = hp + hw;
  const int pw = w + 2 * pad, ph = h + 2 * pad;

  // Reflect-padded copy; padded (x + pad, y + pad) holds pixel (x, y).
  ImageRGB padded(pw, ph);
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      padded.at(x, y) = img.at(reflect_index(x - pad, w), reflect_index(y - pad, h));
    }
  }

  const double norm = 1.0 / (3.0 * params.patch * params.patch);
  const double inv_h2 = 1.0 / (params.h * params.h);
  const double offset = 2.0 * params.sigma * params.sigma;

  // Difference image covers pixels [-hp, w + hp) x [-hp, h + hp).
  const int dw = w + 2 * hp, dh = h + 2 * hp;
  std::vector<double> diff(static_cast<std::size_t>(dw) * dh);
  std::vector<double> hsum(static_cast<std::size_t>(w) * dh);
  std::vector<Rgb> acc(static_cast<std::size_t>(w) * h);
  std::vector<double> wsum(static_cast<std::size_t>(w) * h, 0.0);

  for (int oy = -hw; oy <= hw; ++oy) {
    for (int ox = -hw; ox <= hw; ++ox) {
#pragma omp parallel for schedule(static)
      for (int y = 0; y < dh; ++y) {
        for (int x = 0; x < dw; ++x) {
          const int px = x - hp + pad, py = y - hp + pad;
          const Rgb& a = padded.at(px, py);
          const Rgb& b = padded.at(px + ox, py + oy);
          const double dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
          diff[static_cast<std::size_t>(y) * dw + x] = dr * dr + dg * dg + db * db;
        }
      }

#pragma omp parallel for schedule(static)
      for (int y = 0; y < dh; ++y) {
        const double* row = &diff[static_cast<std::size_t>(y) * dw];
        for (int x = 0; x < w; ++x) {
          double s = 0.0;
          for (int k = 0; k < params.patch; ++k) s += row[x + k];
          hsum[static_cast<std::size_t>(y) * w + x] = s;
        }
      }

#pragma omp parallel for schedule(static)
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double d2 = 0.0;
          for (int k = 0; k < params.patch; ++k) {
            d2 += hsum[static_cast<std::size_t>(y + k) * w + x];
          }
          d2 *= norm;
          const double wt = std::exp(-std::max(d2 - offset, 0.0) * inv_h2);
          const Rgb& q = padded.at(x + pad + ox, y + pad + oy);
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          acc[i].r += wt * q.r;
          acc[i].g += wt * q.g;
          acc[i].b += wt * q.b;
          wsum[i] += wt;
        }
      }
    }
  }

  ImageRGB out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {acc[i].r / wsum[i], acc[i].g / wsum[i], acc[i].b / wsum[i]};
  }
  return out;
}

Mask hadamard(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "hadamard");
  Mask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

namespace serial {

ImageRGB gaussian_blur(const ImageRGB& img, double sigma) {
  const std::vector<double> taps = gaussian_kernel(sigma);
  const int half = static_cast<int>(taps.size() / 2);
  const int w = img.width(), h = img.height();
  ImageRGB tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Rgb acc{};
      for (int k = -half; k <= half; ++k) {
        const Rgb& p = img.at(std::clamp(x + k, 0, w - 1), y);
        acc.r += taps[k + half] * p.r;
        acc.g += taps[k + half] * p.g;
        acc.b += taps[k + half] * p.b;
      }
      tmp.at(x, y) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Rgb acc{};
      for (int k = -half; k <= half; ++k) {
        const Rgb& p = tmp.at(x, std::clamp(y + k, 0, h - 1));
        acc.r += taps[k + half] * p.r;
        acc.g += taps[k + half] * p.g;
        acc.b += taps[k + half] * p.b;
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

// Scatter formulation: each set pixel stamps the disk around itself.
Mask dilate(const Mask& mask, double radius) {
  const auto offsets = disk_offsets(radius);
  Mask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const double v = mask.at(x, y);
      if (v <= 0.0) continue;
      for (const auto& [dx, dy] : offsets) {
        if (!out.contains(x + dx, y + dy)) continue;
        double& o = out.at(x + dx, y + dy);
        o = std::max(o, v);
      }
    }
  }
  return out;
}

ImageRGB nl_means_denoise(const ImageRGB& img, const NlMeansParams& params) {
  const int w = img.width(), h = img.height();
  const int hp = params.patch / 2, hw = params.window / 2;
  const double norm = 1.0 / (3.0 * params.patch * params.patch);
  const double inv_h2 = 1.0 / (params.h * params.h);
  const double offset = 2.0 * params.sigma * params.sigma;
  auto px = [&](int x, int y) -> const Rgb& {
    return img.at(reflect_index(x, w), reflect_index(y, h));
  };

  ImageRGB out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Rgb acc{};
      double total = 0.0;
      for (int oy = -hw; oy <= hw; ++oy) {
        for (int ox = -hw; ox <= hw; ++ox) {
          double d2 = 0.0;
          for (int ky = -hp; ky <= hp; ++ky) {
            for (int kx = -hp; kx <= hp; ++kx) {
              const Rgb& a = px(x + kx, y + ky);
              const Rgb& b = px(x + ox + kx, y + oy + ky);
              d2 += (a.r - b.r) * (a.r - b.r) + (a.g - b.g) * (a.g - b.g) +
                    (a.b - b.b) * (a.b - b.b);
            }
          }
          const double wt = std::exp(-std::max(d2 * norm - offset, 0.0) * inv_h2);
          const Rgb& q = px(x + ox, y + oy);
          acc.r += wt * q.r;
          acc.g += wt * q.g;
          acc.b += wt * q.b;
          total += wt;
        }
      }
      out.at(x, y) = {acc.r / total, acc.g / total, acc.b / total};
    }
  }
  return out;
}

}  // namespace serial

}  // namespace agarsynth
