#include "agarsynth/segmenter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

#include "agarsynth/color.hpp"

namespace agarsynth {

namespace {

bool center_in(const BBox& b, int x, int y) {
  const double cx = x + 0.5, cy = y + 0.5;
  return cx >= b.x && cx < b.right() && cy >= b.y && cy < b.bottom();
}

// For every pixel, the index of the nearest valid pixel in 8-connected BFS
// order.
std::vector<std::size_t> nearest_valid(const Mask& m_d) {
  const int w = m_d.width(), h = m_d.height();
  std::vector<std::size_t> src(m_d.size(), SIZE_MAX);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < m_d.size(); ++i) {
    if (m_d[i] <= 0.5) {
      src[i] = i;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if ((dx || dy) && nx >= 0 && ny >= 0 && nx < w && ny < h) {
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (src[j] == SIZE_MAX) {
            src[j] = src[i];
            queue.push_back(j);
          }
        }
      }
  }
  return src;
}

template <typename T>
Raster<T> sub_raster(const Raster<T>& r, const PixelRect& rect) {
  Raster<T> out(rect.w, rect.h);
  for (int y = 0; y < rect.h; ++y)
    for (int x = 0; x < rect.w; ++x) out.at(x, y) = r.at(rect.x + x, rect.y + y);
  return out;
}

}  // namespace

ClusterCrop crop_cluster(const ImageRGB& image, std::span<const BBox> boxes,
                         int margin) {
  if (boxes.empty()) throw std::invalid_argument("crop_cluster: empty cluster");
  if (margin < 0) throw std::invalid_argument("crop_cluster: negative margin");
  const PixelRect u = enclosing_rect(boxes);
  const int x0 = std::max(0, u.x - margin), y0 = std::max(0, u.y - margin);
  const int x1 = std::min(image.width(), u.right() + margin);
  const int y1 = std::min(image.height(), u.bottom() + margin);
  if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("crop_cluster: boxes outside image");

  ClusterCrop crop;
  crop.origin = {x0, y0, x1 - x0, y1 - y0};
  crop.image = sub_raster(image, crop.origin);
  for (const BBox& b : boxes) crop.member_boxes.push_back({b.x - x0, b.y - y0, b.w, b.h});
  crop.m_bx = Mask(crop.origin.w, crop.origin.h);
  for (int y = 0; y < crop.origin.h; ++y)
    for (int x = 0; x < crop.origin.w; ++x)
      for (const BBox& b : crop.member_boxes)
        if (center_in(b, x, y)) {
          crop.m_bx.at(x, y) = 1.0;
          break;
        }
  return crop;
}

Mask detect_dark_artifacts(const ImageLab& crop_lab, double l_thresh, double b_thresh) {
  Mask m(crop_lab.width(), crop_lab.height());
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = (crop_lab[i].l < l_thresh && crop_lab[i].b < b_thresh) ? 1.0 : 0.0;
  return m;
}

ImageRGB randomwalk_inpaint(const ImageRGB& crop, const Mask& m_d, Rng& rng,
                            int max_steps) {
  require_same_shape(crop, m_d, "randomwalk_inpaint");
  if (max_steps < 1) throw std::invalid_argument("randomwalk_inpaint: max_steps must be >= 1");
  if (count_above(m_d, 0.5) == 0) return crop;
  if (count_above(m_d, 0.5) == m_d.size())
    throw SegmentationError("randomwalk_inpaint: no valid pixels to copy from");

  const int w = crop.width(), h = crop.height();
  ImageRGB out = crop;
  std::vector<std::size_t> fallback;
  std::array<std::pair<int, int>, 8> moves;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (m_d.at(x, y) <= 0.5) continue;
      int cx = x, cy = y;
      bool found = false;
      for (int step = 0; step < max_steps && !found; ++step) {
        int n = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            if ((dx || dy) && crop.contains(cx + dx, cy + dy)) moves[n++] = {dx, dy};
        const auto [dx, dy] = moves[uniform_index(rng, n)];
        cx += dx, cy += dy;
        found = m_d.at(cx, cy) <= 0.5;
      }
      if (found) {
        out.at(x, y) = crop.at(cx, cy);
      } else {
        if (fallback.empty()) fallback = nearest_valid(m_d);
        out.at(x, y) = crop[fallback[static_cast<std::size_t>(y) * w + x]];
      }
    }
  }
  return out;
}

Mask blending_mask(const ImageLab& crop_lab, const Mask& m_s, double scale_k) {
  require_same_shape(crop_lab, m_s, "blending_mask");
  if (!(scale_k > 0.0)) throw std::invalid_argument("blending_mask: scale must be > 0");
  Lab bg{};
  double n = 0;
  for (std::size_t i = 0; i < m_s.size(); ++i) {
    if (m_s[i] > 0.5) continue;
    bg.l += crop_lab[i].l, bg.a += crop_lab[i].a, bg.b += crop_lab[i].b;
    n += 1;
  }
  if (n == 0) throw SegmentationError("blending_mask: segmentation covers the whole crop");
  bg = {bg.l / n, bg.a / n, bg.b / n};
  Mask m(m_s.width(), m_s.height());
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = std::clamp(delta_e(crop_lab[i], bg) / scale_k, 0.0, 1.0);
  return m;
}

std::optional<ColonyCluster> extract_cluster(const ImageRGB& image,
                                             std::span<const BBox> boxes,
                                             int species,
                                             const SegmentationParams& params,
                                             Rng& rng, MaskSet* masks) {
  const ClusterCrop crop = crop_cluster(image, boxes, params.crop_margin);
  const ImageRGB sharp = unsharp_mask(crop.image, params.unsharp_radius, params.unsharp_amount);
  Mask m_d = detect_dark_artifacts(rgb_to_lab(sharp), params.artifact_l, params.artifact_b);
  m_d = dilate(m_d, params.artifact_dilation);
  const ImageRGB clean = randomwalk_inpaint(sharp, m_d, rng, params.walk_max_steps);
  const ImageRGB denoised = nl_means_denoise(
      clean, {params.denoise_h, params.denoise_patch, params.denoise_window, 0.0});
  const ImageLab lab = rgb_to_lab(denoised);

  Mask lum = lab_channel(lab, 0);
  for (double& v : lum.pixels()) v /= 100.0;
  ChanVeseParams cv;
  cv.mu = params.cv_mu;
  cv.max_iter = params.cv_max_iter;
  const Mask m_s = dilate(chan_vese(lum, cv).foreground, params.margin);
  const Mask m_b = blending_mask(lab, m_s, params.blend_scale);
  const Mask alpha = hadamard(hadamard(crop.m_bx, m_s), m_b);
  if (masks) *masks = {m_d, m_s, m_b, alpha};

  std::vector<Mask> instances;
  std::optional<PixelRect> support;
  for (const BBox& b : crop.member_boxes) {
    Mask inst(alpha.width(), alpha.height());
    for (int y = 0; y < alpha.height(); ++y)
      for (int x = 0; x < alpha.width(); ++x)
        if (alpha.at(x, y) > 0.5 && center_in(b, x, y)) inst.at(x, y) = 1.0;
    if (count_above(inst, 0.5) > 0) instances.push_back(std::move(inst));
  }
  if (instances.empty()) return std::nullopt;

  // Trim to the nonzero alpha support.
  const PixelRect keep = *tight_box(alpha, 0.0);
  ColonyCluster out;
  out.species = species;
  out.fragment.color = sub_raster(denoised, keep);
  out.fragment.alpha = sub_raster(alpha, keep);
  for (const Mask& inst : instances) {
    Mask m = sub_raster(inst, keep);
    out.member_boxes.push_back(tight_box(m)->to_bbox());
    out.instance_masks.push_back(std::move(m));
  }
  return out;
}

}  // namespace agarsynth
