#include "agarsynth/stylizer.hpp"

#include <algorithm>
#include <cmath>

#include "agarsynth/color.hpp"
#include "agarsynth/rng.hpp"

namespace agarsynth {

namespace {

constexpr std::uint64_t kFilterSeed = 0x5EEDF11E75ULL;

FeatureLayer convolve_relu(const ImageRGB& img) {
  const int h = img.height() - 2, w = img.width() - 2;
  FeatureLayer out(kExtractorFilters, h, w);
  const auto& filters = default_filters();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < kExtractorFilters; ++k) {
        const ConvFilter& f = filters[k];
        double acc = f.bias;
        for (int dy = 0; dy < 3; ++dy)
          for (int dx = 0; dx < 3; ++dx) {
            const Rgb& p = img.at(x + dx, y + dy);
            acc += f.weights[0 * 9 + dy * 3 + dx] * p.r + f.weights[1 * 9 + dy * 3 + dx] * p.g +
                   f.weights[2 * 9 + dy * 3 + dx] * p.b;
          }
        out.at(k, y, x) = std::max(acc, 0.0);
      }
    }
  }
  return out;
}

}  // namespace

GramMatrix gram(const FeatureLayer& layer) {
  const int c = layer.channels;
  const std::size_t n = std::size_t(layer.height) * layer.width;
  GramMatrix g{c, std::vector<double>(std::size_t(c) * c, 0.0)};
  const double norm = double(c) * n;
  if (norm == 0) return g;
  for (int i = 0; i < c; ++i) {
    const double* fi = layer.data.data() + i * n;
    for (int j = i; j < c; ++j) {
      const double* fj = layer.data.data() + j * n;
      double s = 0;
      for (std::size_t k = 0; k < n; ++k) s += fi[k] * fj[k];
      g.values[std::size_t(i) * c + j] = g.values[std::size_t(j) * c + i] = s / norm;
    }
  }
  return g;
}

double frobenius_distance(const GramMatrix& a, const GramMatrix& b) {
  if (a.size != b.size) throw std::invalid_argument("gram matrices differ in size");
  double s = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double style_loss(const ImageRGB& y, const ImageRGB& y_c, const ImageRGB& y_s,
                  double lambda, const FeatureExtractor& extractor) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0, 1]");
  const FeatureMaps fy = extractor(y), fc = extractor(y_c), fs = extractor(y_s);
  if (fy.size() != fc.size() || fy.size() != fs.size())
    throw std::invalid_argument("extractor returned different layer counts");
  double loss = 0;
  for (std::size_t l = 0; l < fy.size(); ++l) {
    const GramMatrix gy = gram(fy[l]);
    loss += (1.0 - lambda) * frobenius_distance(gy, gram(fc[l])) +
            lambda * frobenius_distance(gy, gram(fs[l]));
  }
  return loss;
}

double style_loss(const ImageRGB& y, const ImageRGB& y_c, const ImageRGB& y_s, double lambda) {
  return style_loss(y, y_c, y_s, lambda, default_extractor);
}

const std::array<ConvFilter, kExtractorFilters>& default_filters() {
  static const std::array<ConvFilter, kExtractorFilters> filters = [] {
    std::array<ConvFilter, kExtractorFilters> f{};
    std::uint64_t state = kFilterSeed;
    auto next = [&] {
      state = splitmix64(state);
      return static_cast<double>(state >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    };
    for (ConvFilter& filter : f) {
      for (double& w : filter.weights) w = next();
      filter.bias = 0.1 * next();
    }
    return f;
  }();
  return filters;
}

ImageRGB average_pool2(const ImageRGB& img) {
  ImageRGB out(img.width() / 2, img.height() / 2);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      const Rgb& a = img.at(2 * x, 2 * y);
      const Rgb& b = img.at(2 * x + 1, 2 * y);
      const Rgb& c = img.at(2 * x, 2 * y + 1);
      const Rgb& d = img.at(2 * x + 1, 2 * y + 1);
      out.at(x, y) = {(a.r + b.r + c.r + d.r) / 4, (a.g + b.g + c.g + d.g) / 4,
                      (a.b + b.b + c.b + d.b) / 4};
    }
  return out;
}

FeatureMaps default_extractor(const ImageRGB& img) {
  if (img.width() < 3 || img.height() < 3)
    throw std::invalid_argument("default extractor needs at least 3x3 pixels");
  FeatureMaps maps;
  ImageRGB level = img;
  for (int s = 0; s < kExtractorScales; ++s) {
    if (level.width() < 3 || level.height() < 3) break;
    maps.push_back(convolve_relu(level));
    level = average_pool2(level);
  }
  return maps;
}

LabMoments lab_moments(const ImageLab& img) {
  LabMoments m;
  if (img.empty()) return m;
  const double n = img.size();
  for (const Lab& p : img.pixels()) {
    m.mean[0] += p.l, m.mean[1] += p.a, m.mean[2] += p.b;
  }
  for (double& v : m.mean) v /= n;
  for (const Lab& p : img.pixels()) {
    const double d[3] = {p.l - m.mean[0], p.a - m.mean[1], p.b - m.mean[2]};
    for (int c = 0; c < 3; ++c) m.stddev[c] += d[c] * d[c];
  }
  for (double& v : m.stddev) v = std::sqrt(v / n);
  return m;
}

ImageLab transfer_moments(const ImageLab& content, const LabMoments& cm,
                          const LabMoments& sm, double strength) {
  std::array<double, 3> scale{}, target_mean{};
  for (int c = 0; c < 3; ++c) {
    target_mean[c] = cm.mean[c] + strength * (sm.mean[c] - cm.mean[c]);
    const double target_sd = cm.stddev[c] + strength * (sm.stddev[c] - cm.stddev[c]);
    scale[c] = cm.stddev[c] > 0 ? target_sd / cm.stddev[c] : 1.0;
  }
  ImageLab out(content.width(), content.height());
  for (std::size_t i = 0; i < content.size(); ++i) {
    const Lab& p = content[i];
    out[i] = {(p.l - cm.mean[0]) * scale[0] + target_mean[0],
              (p.a - cm.mean[1]) * scale[1] + target_mean[1],
              (p.b - cm.mean[2]) * scale[2] + target_mean[2]};
  }
  return out;
}

ImageRGB color_transfer_lab(const ImageRGB& content, const ImageRGB& style, double strength) {
  if (!(strength >= 0.0 && strength <= 1.0)) throw std::invalid_argument("strength must be in [0, 1]");
  if (strength == 0.0) return content;
  const ImageLab c = rgb_to_lab(content);
  return lab_to_rgb(transfer_moments(c, lab_moments(c), lab_moments(rgb_to_lab(style)), strength));
}

}  // namespace agarsynth
