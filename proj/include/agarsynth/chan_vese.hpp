#pragma once

#include <vector>

#include "agarsynth/raster.hpp"

namespace agarsynth {

// Two-phase piecewise-constant Chan-Vese segmentation:
//
//   E(R) = mu * Perimeter(R) + sum_{p in R} (I(p) - c1)^2
//                            + sum_{p not in R} (I(p) - c2)^2
//
// with c1, c2 the region means. The level set evolves with the semi-implicit
// curvature scheme used by scikit-image (delta = 1 / (1 + phi^2)), starting
// from a checkerboard. Every step is taken; the level set with the lowest
// energy seen so far is the one returned.
struct ChanVeseParams {
  double mu = 0.25;
  int max_iter = 500;
  double tol = 1e-3;  // RMS change of the level set that counts as converged
  double dt = 0.5;
};

struct ChanVeseResult {
  Mask foreground;             // binary
  int iterations = 0;          // steps taken
  bool converged = false;
  std::vector<double> energy;  // initial energy, then each step that did not raise the best
};

/// gray is expected in [0, 1]; it is min-max normalized internally. The phase
/// whose mean differs more from the mean of the image border becomes the
/// foreground. A featureless input returns an empty foreground.
ChanVeseResult chan_vese(const Mask& gray, const ChanVeseParams& params = {});

/// sin(pi x / 5) * sin(pi y / 5).
Mask checkerboard_level_set(int width, int height);

/// Definitional energy of the region (pixels > 0.5) on image I. Perimeter is
/// the number of 4-neighbour pixel pairs with different labels.
double chan_vese_energy(const Mask& image, const Mask& region, double mu);

/// Min-max normalization to [0, 1]; a constant image maps to zeros.
Mask normalize_unit(const Mask& gray);

/// One level-set update (OpenMP over rows).
Mask chan_vese_step(const Mask& image, const Mask& phi, double mu, double dt);

namespace serial {
Mask chan_vese_step(const Mask& image, const Mask& phi, double mu, double dt);
}  // namespace serial

}  // namespace agarsynth
