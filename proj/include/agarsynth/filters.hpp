#pragma once

#include <vector>

#include "agarsynth/raster.hpp"

namespace agarsynth {

/// Normalized 1D Gaussian taps for the given sigma, truncated at 3 sigma.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with edge replication. OpenMP-parallel over rows
/// and columns.
ImageRGB gaussian_blur(const ImageRGB& img, double sigma);
Mask gaussian_blur(const Mask& img, double sigma);

/// clamp(img + amount * (img - blur(img, radius))). radius is the Gaussian
/// sigma in pixels.
ImageRGB unsharp_mask(const ImageRGB& img, double radius, double amount);

/// Morphological dilation (max filter) with a Euclidean disk of the given
/// radius: pixel offsets (dx, dy) with dx^2 + dy^2 <= radius^2.
Mask dilate(const Mask& mask, double radius);

struct NlMeansParams {
  double h = 0.08;    // filter strength, same units as the channels
  int patch = 5;      // odd patch side
  int window = 11;    // odd search window side
  double sigma = 0.0; // noise estimate subtracted from distances
};

/// Non-local means with patch distances. The weight between pixels p and q is
///   exp(-max(d2(p, q) - 2 sigma^2, 0) / h^2)
/// where d2 is the mean squared difference over the patch and the three
/// channels. Borders use symmetric reflection. Output is a per-pixel weighted
/// average over the search window. Fast path: one shifted difference image
/// per window offset, box-filtered, rows processed in parallel.
ImageRGB nl_means_denoise(const ImageRGB& img, const NlMeansParams& params);

/// Elementwise product. Throws std::invalid_argument on dimension mismatch.
Mask hadamard(const Mask& a, const Mask& b);

/// Reflect index into [0, n) without repeating the edge sample.
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

namespace serial {

// Straightforward single-threaded reference kernels. Kept for testing the
// parallel versions above and for the benchmark comparison.

ImageRGB gaussian_blur(const ImageRGB& img, double sigma);
Mask dilate(const Mask& mask, double radius);
ImageRGB nl_means_denoise(const ImageRGB& img, const NlMeansParams& params);

}  // namespace serial

}  // namespace agarsynth
