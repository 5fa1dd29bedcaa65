#pragma once

#include "agarsynth/raster.hpp"

namespace agarsynth {

// Angles are in degrees, counter-clockwise as seen on screen (y axis points
// down). Rotation happens about the image center onto the smallest canvas
// that holds the rotated rectangle; flips are applied afterwards.
//
// Multiples of 90 degrees are exact index permutations. For a 90 degree turn
// of a W x H image the result is H x W with out(x, y) = in(W - 1 - y, x).

struct RotateFlip {
  double angle = 0.0;
  bool flip_h = false;
  bool flip_v = false;
};

/// Bilinear resampling of color and alpha (alpha-premultiplied); area outside
/// the source is transparent.
RgbaFragment rotate_flip_rgba(const RgbaFragment& frag, const RotateFlip& t);

/// Same geometry as rotate_flip_rgba for a binary companion mask, using
/// nearest-neighbour sampling. A non-empty mask never becomes empty: if every
/// pixel is lost to sampling, the pixel nearest the transformed centroid is
/// kept.
Mask rotate_flip_mask(const Mask& mask, const RotateFlip& t);

/// Canvas size produced by a rotation of a width x height image.
std::pair<int, int> rotated_extent(int width, int height, double angle);

/// Uniform rescale by factor (>0). Bilinear for the fragment, nearest for masks.
RgbaFragment scale_rgba(const RgbaFragment& frag, double factor);
Mask scale_mask(const Mask& mask, double factor);

/// Bilinear sample at continuous pixel coordinates (pixel centers at integer
/// positions), replicating edges.
Rgb sample_bilinear(const ImageRGB& img, double x, double y);

}  // namespace agarsynth
