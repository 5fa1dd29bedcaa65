#include "agarsynth/composer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace agarsynth {

namespace {

constexpr int kBackgroundRetries = 10000;

int pick_weighted(Rng& rng, std::span<const double> weights) {
  double total = 0;
  for (double w : weights) total += w;
  if (!(total > 0)) throw std::invalid_argument("species weights must not all be zero");
  const double u = uniform01(rng) * total;
  double acc = 0;
  int last = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    acc += weights[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

template <typename T>
Raster<T> sub_raster(const Raster<T>& r, const PixelRect& rect) {
  Raster<T> out(rect.w, rect.h);
  for (int y = 0; y < rect.h; ++y)
    for (int x = 0; x < rect.w; ++x) out.at(x, y) = r.at(rect.x + x, rect.y + y);
  return out;
}

}  // namespace

bool UsableRegion::contains(double px, double py) const {
  if (shape == Shape::Circle) return (px - cx) * (px - cx) + (py - cy) * (py - cy) <= r * r;
  return px >= x && py >= y && px <= x + w && py <= y + h;
}

std::vector<std::size_t> ClusterBank::of_species(int species) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < clusters.size(); ++i)
    if (clusters[i].species == species) out.push_back(i);
  return out;
}

double sample_exponential(Rng& rng, double mean) {
  if (!(mean > 0)) throw std::invalid_argument("count mean must be > 0");
  return -mean * std::log1p(-uniform01(rng));
}

int sample_colony_count(Rng& rng, double count_mean) {
  return static_cast<int>(std::lround(sample_exponential(rng, count_mean)));
}

std::pair<double, double> dish_source_point(const EmptyDish& dish, double angle,
                                            double x, double y) {
  const int w = dish.image.width(), h = dish.image.height();
  const auto [rw, rh] = rotated_extent(w, h, angle);
  const double rad = angle * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double u = x - rw / 2.0, v = y - rh / 2.0;
  return {u * c - v * s + w / 2.0, u * s + v * c + h / 2.0};
}

BackgroundCrop crop_background(const EmptyDish& dish, Rng& rng, int patch_size,
                               std::optional<double> fixed_angle) {
  if (patch_size < 1) throw std::invalid_argument("patch size must be >= 1");
  BackgroundCrop out;
  out.angle = fixed_angle ? *fixed_angle : 360.0 * uniform01(rng);
  const auto [rw, rh] = rotated_extent(dish.image.width(), dish.image.height(), out.angle);
  if (rw < patch_size || rh < patch_size)
    throw std::runtime_error("empty dish '" + dish.id + "' is smaller than a patch");

  const double p = patch_size;
  bool found = false;
  for (int attempt = 0; attempt < kBackgroundRetries && !found; ++attempt) {
    out.x = static_cast<int>(uniform_index(rng, rw - patch_size + 1));
    out.y = static_cast<int>(uniform_index(rng, rh - patch_size + 1));
    found = true;
    for (const auto& [dx, dy] : {std::pair{0.0, 0.0}, {p, 0.0}, {0.0, p}, {p, p}}) {
      const auto [sx, sy] = dish_source_point(dish, out.angle, out.x + dx, out.y + dy);
      if (!dish.region.contains(sx, sy)) {
        found = false;
        break;
      }
    }
  }
  if (!found)
    throw std::runtime_error("no patch fits inside the usable region of dish '" + dish.id + "'");

  out.image = ImageRGB(patch_size, patch_size);
  for (int y = 0; y < patch_size; ++y)
    for (int x = 0; x < patch_size; ++x) {
      const auto [sx, sy] = dish_source_point(dish, out.angle, out.x + x + 0.5, out.y + y + 0.5);
      out.image.at(x, y) = sample_bilinear(dish.image, sx - 0.5, sy - 0.5);
    }
  return out;
}

PlaceResult try_place(std::span<const PixelRect> occupied, int width, int height,
                      int patch_size, Rng& rng, int max_attempts) {
  PlaceResult res;
  if (width < 1 || height < 1 || width > patch_size || height > patch_size) return res;
  while (res.attempts < max_attempts) {
    ++res.attempts;
    const PixelRect r{static_cast<int>(uniform_index(rng, patch_size - width + 1)),
                      static_cast<int>(uniform_index(rng, patch_size - height + 1)), width,
                      height};
    if (std::none_of(occupied.begin(), occupied.end(),
                     [&](const PixelRect& o) { return intersects(r, o); })) {
      res.rect = r;
      break;
    }
  }
  return res;
}

ColonyCluster transform_cluster(const ColonyCluster& cluster, const RotateFlip& t,
                                double scale) {
  ColonyCluster out;
  out.species = cluster.species;
  RgbaFragment frag = cluster.fragment;
  std::vector<Mask> masks = cluster.instance_masks;
  if (scale != 1.0) {
    frag = scale_rgba(frag, scale);
    for (Mask& m : masks) m = scale_mask(m, scale);
  }
  frag = rotate_flip_rgba(frag, t);
  for (Mask& m : masks) m = rotate_flip_mask(m, t);

  Mask support = frag.alpha;
  for (const Mask& m : masks)
    for (std::size_t i = 0; i < m.size(); ++i) support[i] = std::max(support[i], m[i]);
  const PixelRect keep = *tight_box(support, 0.0);
  out.fragment.color = sub_raster(frag.color, keep);
  out.fragment.alpha = sub_raster(frag.alpha, keep);
  for (const Mask& m : masks) {
    Mask trimmed = sub_raster(m, keep);
    out.member_boxes.push_back(tight_box(trimmed)->to_bbox());
    out.instance_masks.push_back(std::move(trimmed));
  }
  return out;
}

void composite(ImageRGB& canvas, const RgbaFragment& frag, int x, int y) {
  for (int j = 0; j < frag.height(); ++j)
    for (int i = 0; i < frag.width(); ++i) {
      const double a = frag.alpha.at(i, j);
      if (a <= 0.0) continue;
      Rgb& dst = canvas.at(x + i, y + j);
      const Rgb& src = frag.color.at(i, j);
      if (a >= 1.0) {
        dst = src;
      } else {
        dst = {a * src.r + (1 - a) * dst.r, a * src.g + (1 - a) * dst.g,
               a * src.b + (1 - a) * dst.b};
      }
    }
}

SyntheticPatch compose_patch(const GenerationConfig& cfg, const ClusterBank& bank,
                             std::span<const EmptyDish> dishes, Rng& rng) {
  if (dishes.empty()) throw std::invalid_argument("dish bank is empty");
  std::array<std::vector<std::size_t>, kSpeciesCount> pools;
  std::array<double, kSpeciesCount> weights{};
  for (int s = 0; s < kSpeciesCount; ++s) {
    pools[s] = bank.of_species(s + 1);
    weights[s] = pools[s].empty() ? 0.0 : cfg.species_weights[s];
  }

  SyntheticPatch patch;
  PatchInfo& info = patch.info;
  info.dish = uniform_index(rng, dishes.size());
  BackgroundCrop bg = crop_background(dishes[info.dish], rng, cfg.patch_size);
  patch.image = std::move(bg.image);
  info.background_angle = bg.angle;
  const int fixed = pick_weighted(rng, weights);
  info.species = cfg.mixed_species ? 0 : fixed + 1;
  info.requested = sample_colony_count(rng, cfg.count_mean);

  std::vector<PixelRect> occupied;
  int placed = 0;
  long failures = 0;
  const long budget = 50L * cfg.max_place_attempts;
  while (placed < info.requested && failures < budget) {
    const int s = cfg.mixed_species ? pick_weighted(rng, weights) : fixed;
    Placement pl;
    pl.cluster = pools[s][uniform_index(rng, pools[s].size())];
    pl.transform.angle = 360.0 * uniform01(rng);
    pl.transform.flip_h = uniform_index(rng, 2) == 1;
    pl.transform.flip_v = uniform_index(rng, 2) == 1;
    if (cfg.scale_augment)
      pl.scale = cfg.scale_min + (cfg.scale_max - cfg.scale_min) * uniform01(rng);

    const ColonyCluster c = transform_cluster(bank.clusters[pl.cluster], pl.transform, pl.scale);
    const PlaceResult res = try_place(occupied, c.fragment.width(), c.fragment.height(),
                                      cfg.patch_size, rng, cfg.max_place_attempts);
    if (!res.rect) {
      failures += res.attempts ? res.attempts : cfg.max_place_attempts;
      continue;
    }
    failures += res.attempts - 1;
    pl.rect = *res.rect;
    occupied.push_back(pl.rect);
    composite(patch.image, c.fragment, pl.rect.x, pl.rect.y);
    for (const Mask& m : c.instance_masks) {
      PatchAnnotation a;
      a.category_id = s + 1;
      a.bbox = *tight_box(m);
      a.bbox.x += pl.rect.x;
      a.bbox.y += pl.rect.y;
      a.segmentation = rle_encode_placed(m, pl.rect.x, pl.rect.y, cfg.patch_size, cfg.patch_size);
      info.annotations.push_back(std::move(a));
    }
    placed += static_cast<int>(c.instance_masks.size());
    info.placements.push_back(pl);
  }
  return patch;
}

}  // namespace agarsynth
