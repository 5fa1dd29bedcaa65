#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "agarsynth/chan_vese.hpp"
#include "agarsynth/filters.hpp"
#include "agarsynth/geometry.hpp"
#include "agarsynth/raster.hpp"
#include "agarsynth/rng.hpp"

namespace agarsynth {

// Raised for clusters that cannot be segmented; callers drop and count them.
struct SegmentationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ClusterCrop {
  ImageRGB image;
  std::vector<BBox> member_boxes;  // crop coordinates
  int species = 0;
  Mask m_bx;
  PixelRect origin;  // crop rectangle in source-image coordinates
};

struct MaskSet {
  Mask m_d;
  Mask m_s;
  Mask m_b;
  Mask alpha;
};

struct ColonyCluster {
  RgbaFragment fragment;
  std::vector<BBox> member_boxes;
  std::vector<Mask> instance_masks;  // same size as the fragment
  int species = 0;
};

struct SegmentationParams {
  double unsharp_radius = 2.0;
  double unsharp_amount = 0.8;
  double artifact_l = 30.0;  // L below this ...
  double artifact_b = 20.0;  // ... and b below this is a dark artifact
  double artifact_dilation = 2.0;
  double denoise_h = 0.06;
  int denoise_patch = 5;
  int denoise_window = 11;
  double cv_mu = 0.25;
  int cv_max_iter = 300;
  double margin = 2.0;
  double blend_scale = 12.0;  // Lab distance at which alpha saturates
  int crop_margin = 8;
  int walk_max_steps = 4096;
};

ClusterCrop crop_cluster(const ImageRGB& image, std::span<const BBox> boxes,
                         int margin);

Mask detect_dark_artifacts(const ImageLab& crop_lab, double l_thresh, double b_thresh);

// Each masked pixel takes the color of the first unmasked pixel hit by an
// 8-neighbour random walk; walks longer than max_steps fall back to the
// nearest unmasked pixel.
ImageRGB randomwalk_inpaint(const ImageRGB& crop, const Mask& m_d, Rng& rng,
                            int max_steps);

Mask blending_mask(const ImageLab& crop_lab, const Mask& m_s, double scale_k);

// Intermediate masks are written to `masks` when it is not null. Returns
// nullopt when nothing of the cluster survives.
std::optional<ColonyCluster> extract_cluster(const ImageRGB& image,
                                             std::span<const BBox> boxes,
                                             int species,
                                             const SegmentationParams& params,
                                             Rng& rng, MaskSet* masks = nullptr);

}  // namespace agarsynth
