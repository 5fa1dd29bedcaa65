#include "agarsynth/chan_vese.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace agarsynth {

namespace {

constexpr double kEta = 1e-16;

double regularized_delta(double phi) { return 1.0 / (1.0 + phi * phi); }

// Semi-implicit update of one pixel given the region means.
double update_pixel(const Mask& image, const Mask& phi, int x, int y, double mu,
                    double dt, double c1, double c2) {
  const int w = phi.width(), h = phi.height();
  const double p = phi.at(x, y);
  const double xp = phi.at(std::min(x + 1, w - 1), y);
  const double xn = phi.at(std::max(x - 1, 0), y);
  const double yp = phi.at(x, std::min(y + 1, h - 1));
  const double yn = phi.at(x, std::max(y - 1, 0));

  const double phixp = xp - p, phixn = p - xn, phix0 = (xp - xn) / 2.0;
  const double phiyp = yp - p, phiyn = p - yn, phiy0 = (yp - yn) / 2.0;
  const double k1 = 1.0 / std::sqrt(kEta + phixp * phixp + phiy0 * phiy0);
  const double k2 = 1.0 / std::sqrt(kEta + phixn * phixn + phiy0 * phiy0);
  const double k3 = 1.0 / std::sqrt(kEta + phix0 * phix0 + phiyp * phiyp);
  const double k4 = 1.0 / std::sqrt(kEta + phix0 * phix0 + phiyn * phiyn);
  const double curvature = xp * k1 + xn * k2 + yp * k3 + yn * k4;

  const double v = image.at(x, y);
  const double data = -(v - c1) * (v - c1) + (v - c2) * (v - c2);
  const double d = dt * regularized_delta(p);
  return (p + d * (mu * curvature + data)) / (1.0 + mu * d * (k1 + k2 + k3 + k4));
}

struct RegionMeans {
  double inside = 0.0;
  double outside = 0.0;
  double n_inside = 0.0;
  double n_outside = 0.0;
};

// Row partial sums are accumulated independently and combined in row order,
// so the result does not depend on the thread count.
RegionMeans region_means(const Mask& image, const Mask& level, double cut) {
  const int w = image.width(), h = image.height();
  std::vector<double> in_sum(h), out_sum(h), in_n(h), out_n(h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    double si = 0, so = 0, ni = 0, no = 0;
    for (int x = 0; x < w; ++x) {
      if (level.at(x, y) > cut) {
        si += image.at(x, y);
        ni += 1;
      } else {
        so += image.at(x, y);
        no += 1;
      }
    }
    in_sum[y] = si, out_sum[y] = so, in_n[y] = ni, out_n[y] = no;
  }
  RegionMeans m;
  double si = 0, so = 0;
  for (int y = 0; y < h; ++y) {
    si += in_sum[y], so += out_sum[y];
    m.n_inside += in_n[y], m.n_outside += out_n[y];
  }
  m.inside = m.n_inside > 0 ? si / m.n_inside : 0.0;
  m.outside = m.n_outside > 0 ? so / m.n_outside : 0.0;
  return m;
}

double border_mean(const Mask& image) {
  const int w = image.width(), h = image.height();
  double sum = 0.0;
  double n = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x == 0 || y == 0 || x == w - 1 || y == h - 1) {
        sum += image.at(x, y);
        n += 1;
      }
    }
  }
  return n > 0 ? sum / n : 0.0;
}

Mask threshold_region(const Mask& phi, bool inside) {
  Mask out(phi.width(), phi.height());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    out[i] = ((phi[i] > 0.0) == inside) ? 1.0 : 0.0;
  }
  return out;
}

double rms_difference(const Mask& a, const Mask& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return a.size() ? std::sqrt(s / a.size()) : 0.0;
}

}  // namespace

Mask checkerboard_level_set(int width, int height) {
  Mask phi(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      phi.at(x, y) = std::sin(std::numbers::pi / 5.0 * x) *
                     std::sin(std::numbers::pi / 5.0 * y);
    }
  }
  return phi;
}

Mask normalize_unit(const Mask& gray) {
  Mask out = gray;
  if (gray.empty()) return out;
  const auto [lo, hi] = std::minmax_element(gray.pixels().begin(), gray.pixels().end());
  const double min = *lo, range = *hi - *lo;
  for (double& v : out.pixels()) v = range > 0.0 ? (v - min) / range : 0.0;
  return out;
}

double chan_vese_energy(const Mask& image, const Mask& region, double mu) {
  require_same_shape(image, region, "chan_vese_energy");
  const RegionMeans m = region_means(image, region, 0.5);
  const int w = image.width(), h = image.height();
  double data = 0.0;
  double perimeter = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool in = region.at(x, y) > 0.5;
      const double c = in ? m.inside : m.outside;
      const double d = image.at(x, y) - c;
      data += d * d;
      if (x + 1 < w && in != (region.at(x + 1, y) > 0.5)) perimeter += 1.0;
      if (y + 1 < h && in != (region.at(x, y + 1) > 0.5)) perimeter += 1.0;
    }
  }
  return mu * perimeter + data;
}

Mask chan_vese_step(const Mask& image, const Mask& phi, double mu, double dt) {
  const RegionMeans m = region_means(image, phi, 0.0);
  Mask out(phi.width(), phi.height());
  const int w = phi.width(), h = phi.height();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(x, y) = update_pixel(image, phi, x, y, mu, dt, m.inside, m.outside);
    }
  }
  return out;
}

namespace serial {

Mask chan_vese_step(const Mask& image, const Mask& phi, double mu, double dt) {
  double si = 0, so = 0, ni = 0, no = 0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi[i] > 0.0) {
      si += image[i];
      ni += 1;
    } else {
      so += image[i];
      no += 1;
    }
  }
  const double c1 = ni > 0 ? si / ni : 0.0;
  const double c2 = no > 0 ? so / no : 0.0;
  Mask out(phi.width(), phi.height());
  for (int y = 0; y < phi.height(); ++y)
    for (int x = 0; x < phi.width(); ++x)
      out.at(x, y) = update_pixel(image, phi, x, y, mu, dt, c1, c2);
  return out;
}

}  // namespace serial

ChanVeseResult chan_vese(const Mask& gray, const ChanVeseParams& params) {
  if (params.mu < 0.0) throw std::invalid_argument("chan-vese mu must be >= 0");
  if (!(params.tol > 0.0)) throw std::invalid_argument("chan-vese tol must be > 0");
  if (params.max_iter < 1) throw std::invalid_argument("chan-vese max_iter must be >= 1");

  const Mask image = normalize_unit(gray);
  ChanVeseResult result;
  Mask phi = checkerboard_level_set(image.width(), image.height());
  double energy = chan_vese_energy(image, threshold_region(phi, true), params.mu);
  result.energy.push_back(energy);

  // Steps are never rejected; the lowest-energy level set seen so far is kept.
  Mask best = phi;
  double best_energy = energy;
  while (result.iterations < params.max_iter) {
    ++result.iterations;
    Mask next = chan_vese_step(image, phi, params.mu, params.dt);
    const double change = rms_difference(next, phi);
    phi = std::move(next);
    const double e = chan_vese_energy(image, threshold_region(phi, true), params.mu);
    if (e <= best_energy) {
      best_energy = e;
      best = phi;
      result.energy.push_back(e);
    }
    if (change < params.tol) {
      result.converged = true;
      break;
    }
  }
  phi = std::move(best);

  const RegionMeans m = region_means(image, phi, 0.0);
  if (m.n_inside == 0 || m.n_outside == 0 ||
      std::abs(m.inside - m.outside) < 1e-9) {
    result.foreground = Mask(image.width(), image.height());
    return result;
  }
  const double border = border_mean(image);
  const bool inside_is_fg =
      std::abs(m.inside - border) > std::abs(m.outside - border);
  result.foreground = threshold_region(phi, inside_is_fg);
  return result;
}

}  // namespace agarsynth
