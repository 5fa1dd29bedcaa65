#include "agarsynth/color.hpp"

#include <algorithm>
#include <cmath>

namespace agarsynth {

namespace {

// IEC 61966-2-1 linear sRGB -> XYZ.
constexpr double kRgbToXyz[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                                    {0.2126729, 0.7151522, 0.0721750},
                                    {0.0193339, 0.1191920, 0.9503041}};

constexpr double kWhite[3] = {
    kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2],
    kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2],
    kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2]};

// Inverse of kRgbToXyz, computed once.
struct InverseMatrix {
  double m[3][3];
  InverseMatrix() {
    const auto& a = kRgbToXyz;
    const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                       a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                       a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    m[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
    m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
    m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
    m[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
    m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
    m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
    m[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
    m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
    m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
  }
};

const InverseMatrix& xyz_to_rgb() {
  static const InverseMatrix inv;
  return inv;
}

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
  return c <= 0.0031308 ? c * 12.92 : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
  return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

double lab_f_inv(double f) {
  const double f3 = f * f * f;
  return f3 > kEpsilon ? f3 : (116.0 * f - 16.0) / kKappa;
}

}  // namespace

Lab rgb_to_lab(const Rgb& rgb) {
  const double lin[3] = {srgb_to_linear(rgb.r), srgb_to_linear(rgb.g),
                         srgb_to_linear(rgb.b)};
  double f[3];
  for (int i = 0; i < 3; ++i) {
    const double v = kRgbToXyz[i][0] * lin[0] + kRgbToXyz[i][1] * lin[1] +
                     kRgbToXyz[i][2] * lin[2];
    f[i] = lab_f(v / kWhite[i]);
  }
  return {116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])};
}

Rgb lab_to_rgb_unclamped(const Lab& lab) {
  const double fy = (lab.l + 16.0) / 116.0;
  const double fx = fy + lab.a / 500.0;
  const double fz = fy - lab.b / 200.0;
  const double xyz[3] = {lab_f_inv(fx) * kWhite[0], lab_f_inv(fy) * kWhite[1],
                         lab_f_inv(fz) * kWhite[2]};
  const auto& m = xyz_to_rgb().m;
  double out[3];
  for (int i = 0; i < 3; ++i) {
    const double lin = m[i][0] * xyz[0] + m[i][1] * xyz[1] + m[i][2] * xyz[2];
    // pow of a negative base is undefined; mirror the curve instead.
    out[i] = lin < 0.0 ? -linear_to_srgb(-lin) : linear_to_srgb(lin);
  }
  return {out[0], out[1], out[2]};
}

Rgb lab_to_rgb(const Lab& lab) {
  const Rgb c = lab_to_rgb_unclamped(lab);
  return {std::clamp(c.r, 0.0, 1.0), std::clamp(c.g, 0.0, 1.0),
          std::clamp(c.b, 0.0, 1.0)};
}

ImageLab rgb_to_lab(const ImageRGB& img) {
  ImageLab out(img.width(), img.height());
  const auto n = static_cast<std::ptrdiff_t>(img.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = rgb_to_lab(img[i]);
  return out;
}

ImageRGB lab_to_rgb(const ImageLab& img) {
  ImageRGB out(img.width(), img.height());
  const auto n = static_cast<std::ptrdiff_t>(img.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = lab_to_rgb(img[i]);
  return out;
}

double delta_e(const Lab& a, const Lab& b) {
  const double dl = a.l - b.l, da = a.a - b.a, db = a.b - b.b;
  return std::sqrt(dl * dl + da * da + db * db);
}

}  // namespace agarsynth
