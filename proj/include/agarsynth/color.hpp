#pragma once

#include "agarsynth/raster.hpp"

namespace agarsynth {

// sRGB <-> CIELab under the D65 white point. The white point is derived from
// the sRGB matrix itself so that (1, 1, 1) lands exactly on L = 100, a = b = 0.

Lab rgb_to_lab(const Rgb& rgb);
/// Out-of-gamut results are clamped to [0, 1].
Rgb lab_to_rgb(const Lab& lab);
/// Same as lab_to_rgb but without the final clamp.
Rgb lab_to_rgb_unclamped(const Lab& lab);

ImageLab rgb_to_lab(const ImageRGB& img);
ImageRGB lab_to_rgb(const ImageLab& img);

/// Euclidean distance in Lab (CIE76 delta E).
double delta_e(const Lab& a, const Lab& b);

}  // namespace agarsynth
