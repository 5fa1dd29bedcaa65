#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agarsynth/geometry.hpp"
#include "agarsynth/raster.hpp"
#include "agarsynth/rle.hpp"
#include "agarsynth/rng.hpp"
#include "agarsynth/segmenter.hpp"
#include "agarsynth/transform.hpp"

namespace agarsynth {

inline constexpr int kSpeciesCount = 5;

// Category ids 1..5 in this order.
inline constexpr std::array<const char*, kSpeciesCount> kSpeciesNames = {
    "S.aureus", "B.subtilis", "P.aeruginosa", "E.coli", "C.albicans"};

struct UsableRegion {
  enum class Shape { Rect, Circle };
  Shape shape = Shape::Rect;
  double x = 0, y = 0, w = 0, h = 0;  // rect, pixel-edge coordinates
  double cx = 0, cy = 0, r = 0;       // circle

  static UsableRegion whole(const ImageRGB& img) {
    return {Shape::Rect, 0, 0, double(img.width()), double(img.height())};
  }
  bool contains(double px, double py) const;
};

struct EmptyDish {
  std::string id;
  ImageRGB image;
  UsableRegion region;
};

struct ClusterBank {
  std::vector<ColonyCluster> clusters;
  std::size_t discarded = 0;  // clusters dropped during extraction

  std::vector<std::size_t> of_species(int species) const;
};

struct GenerationConfig {
  int patch_size = 512;
  double count_mean = 10.0;
  int max_place_attempts = 100;
  std::array<double, kSpeciesCount> species_weights = {1, 1, 1, 1, 1};
  std::uint64_t seed = 0;
  int n_patches = 50;
  bool mixed_species = false;
  bool scale_augment = false;
  double scale_min = 0.8;
  double scale_max = 1.25;
};

struct PatchAnnotation {
  int category_id = 0;
  PixelRect bbox;
  Rle segmentation;
};

struct Placement {
  std::size_t cluster = 0;
  PixelRect rect;
  RotateFlip transform;
  double scale = 1.0;
};

struct PatchInfo {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::size_t dish = 0;
  double background_angle = 0.0;
  int species = 0;    // category id, 0 in mixed mode
  int requested = 0;  // drawn colony count
  std::vector<Placement> placements;
  std::vector<PatchAnnotation> annotations;
};

struct SyntheticPatch {
  ImageRGB image;
  PatchInfo info;
};

double sample_exponential(Rng& rng, double mean);
int sample_colony_count(Rng& rng, double count_mean);

struct BackgroundCrop {
  ImageRGB image;
  double angle = 0.0;
  int x = 0;  // offset inside the rotated dish canvas
  int y = 0;
};

// Maps a point of the rotated dish canvas (pixel-edge coordinates) back to
// the unrotated dish image.
std::pair<double, double> dish_source_point(const EmptyDish& dish, double angle,
                                            double x, double y);

BackgroundCrop crop_background(const EmptyDish& dish, Rng& rng, int patch_size,
                               std::optional<double> fixed_angle = std::nullopt);

struct PlaceResult {
  std::optional<PixelRect> rect;
  int attempts = 0;
};

PlaceResult try_place(std::span<const PixelRect> occupied, int width, int height,
                      int patch_size, Rng& rng, int max_attempts);

// Rotated, flipped (and optionally scaled) cluster trimmed to its support.
ColonyCluster transform_cluster(const ColonyCluster& cluster, const RotateFlip& t,
                                double scale = 1.0);

// out = alpha * fragment + (1 - alpha) * canvas inside the placed rectangle.
void composite(ImageRGB& canvas, const RgbaFragment& frag, int x, int y);

SyntheticPatch compose_patch(const GenerationConfig& cfg, const ClusterBank& bank,
                             std::span<const EmptyDish> dishes, Rng& rng);

}  // namespace agarsynth
