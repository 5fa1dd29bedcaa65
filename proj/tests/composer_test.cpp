#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "agarsynth/composer.hpp"
#include "test_util.hpp"

namespace agarsynth {
namespace {

// Round colony fragment with one member per disk.
ColonyCluster disk_cluster(int species, int size, const std::vector<std::tuple<double, double, double>>& disks,
                           Rgb color = {0.9, 0.85, 0.7}) {
  ColonyCluster c;
  c.species = species;
  c.fragment.color = ImageRGB(size, size, color);
  c.fragment.alpha = Mask(size, size);
  for (const auto& [cx, cy, r] : disks) {
    Mask m = testing::disk_mask(size, size, cx, cy, r);
    for (std::size_t i = 0; i < m.size(); ++i)
      c.fragment.alpha[i] = std::max(c.fragment.alpha[i], m[i]);
    c.member_boxes.push_back(tight_box(m)->to_bbox());
    c.instance_masks.push_back(std::move(m));
  }
  return c;
}

ClusterBank small_bank() {
  ClusterBank bank;
  for (int s = 1; s <= kSpeciesCount; ++s) {
    bank.clusters.push_back(disk_cluster(s, 5, {{2, 2, 2}}));
    bank.clusters.push_back(disk_cluster(s, 7, {{3, 3, 3}}));
  }
  return bank;
}

EmptyDish flat_dish(int size, std::uint64_t seed) {
  EmptyDish d;
  d.id = "dish";
  d.image = testing::random_image(size, size, seed);
  d.region = UsableRegion::whole(d.image);
  return d;
}

TEST(ColonyCountTest, MeanMatchesExponentialMean) {
  Rng rng(1);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_colony_count(rng, 10.0);
  EXPECT_GE(sum / n, 9.8);
  EXPECT_LE(sum / n, 10.2);
}

TEST(ColonyCountTest, KolmogorovSmirnovAgainstClosedFormCdf) {
  Rng rng(2);
  std::vector<double> x(100000);
  for (double& v : x) v = sample_exponential(rng, 10.0);
  std::sort(x.begin(), x.end());
  double d = 0;
  const double n = x.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = 1.0 - std::exp(-x[i] / 10.0);
    d = std::max({d, std::abs((i + 1) / n - f), std::abs(i / n - f)});
  }
  EXPECT_LT(d, 0.01);
}

TEST(ColonyCountTest, TinyMeanGivesZeros) {
  Rng rng(3);
  int nonzero = 0;
  for (int i = 0; i < 10000; ++i) nonzero += sample_colony_count(rng, 1e-6) != 0;
  EXPECT_EQ(nonzero, 0);
  EXPECT_THROW(sample_colony_count(rng, 0.0), std::invalid_argument);
}

TEST(CropBackgroundTest, DeterministicForSeed) {
  const EmptyDish dish = flat_dish(120, 4);
  Rng a(5), b(5);
  EXPECT_EQ(crop_background(dish, a, 48).image, crop_background(dish, b, 48).image);
}

TEST(CropBackgroundTest, ZeroAngleIsPlainCrop) {
  const EmptyDish dish = flat_dish(80, 6);
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const BackgroundCrop c = crop_background(dish, rng, 32, 0.0);
    ASSERT_LE(c.x + 32, 80);
    ASSERT_LE(c.y + 32, 80);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) ASSERT_EQ(c.image.at(x, y), dish.image.at(c.x + x, c.y + y));
  }
}

TEST(CropBackgroundTest, CornersMapInsideUsableRegion) {
  EmptyDish dish = flat_dish(200, 8);
  dish.region.shape = UsableRegion::Shape::Circle;
  dish.region.cx = 100;
  dish.region.cy = 100;
  dish.region.r = 95;
  Rng rng(9);
  const int p = 64;
  for (int i = 0; i < 1000; ++i) {
    const BackgroundCrop c = crop_background(dish, rng, p);
    // Independent inverse rotation about the canvas centers.
    const double t = c.angle * std::numbers::pi / 180.0;
    const double rw = std::ceil(200 * std::abs(std::cos(t)) + 200 * std::abs(std::sin(t)) - 1e-9);
    for (const auto& [dx, dy] : {std::pair{0, 0}, {p, 0}, {0, p}, {p, p}}) {
      const double u = c.x + dx - rw / 2, v = c.y + dy - rw / 2;
      const double sx = std::cos(t) * u - std::sin(t) * v + 100;
      const double sy = std::sin(t) * u + std::cos(t) * v + 100;
      ASSERT_LE(std::hypot(sx - 100, sy - 100), 95 + 1e-9) << "crop " << i;
    }
  }
}

TEST(CropBackgroundTest, ImpossibleRegionThrows) {
  EmptyDish dish = flat_dish(100, 10);
  dish.region = {UsableRegion::Shape::Rect, 10, 10, 20, 20};
  Rng rng(11);
  EXPECT_THROW(crop_background(dish, rng, 64), std::runtime_error);
}

TEST(TryPlaceTest, EmptyCanvasAcceptsImmediately) {
  Rng rng(12);
  const PlaceResult r = try_place({}, 3, 3, 64, rng, 10);
  ASSERT_TRUE(r.rect);
  EXPECT_EQ(r.attempts, 1);
}

TEST(TryPlaceTest, FullSizeFragmentHasOnePosition) {
  Rng rng(13);
  const PlaceResult r = try_place({}, 64, 64, 64, rng, 10);
  ASSERT_TRUE(r.rect);
  EXPECT_EQ(*r.rect, (PixelRect{0, 0, 64, 64}));
  EXPECT_FALSE(try_place({}, 65, 10, 64, rng, 10).rect);
}

TEST(TryPlaceTest, AcceptedRectanglesNeverOverlap) {
  Rng rng(14);
  std::vector<PixelRect> placed;
  for (int i = 0; i < 300; ++i) {
    const int w = 2 + uniform_index(rng, 20), h = 2 + uniform_index(rng, 20);
    const PlaceResult r = try_place(placed, w, h, 128, rng, 50);
    if (r.rect) placed.push_back(*r.rect);
  }
  ASSERT_GT(placed.size(), 10u);
  for (std::size_t i = 0; i < placed.size(); ++i) {
    EXPECT_GE(placed[i].x, 0);
    EXPECT_LE(placed[i].right(), 128);
    for (std::size_t j = i + 1; j < placed.size(); ++j) EXPECT_FALSE(intersects(placed[i], placed[j]));
  }
}

TEST(CompositeTest, AlphaEndpoints) {
  ImageRGB canvas(6, 6, Rgb{0.1, 0.2, 0.3});
  RgbaFragment f{ImageRGB(2, 1, Rgb{0.9, 0.8, 0.7}), Mask(2, 1)};
  f.alpha.at(0, 0) = 1.0;
  f.alpha.at(1, 0) = 0.0;
  composite(canvas, f, 2, 3);
  EXPECT_EQ(canvas.at(2, 3), (Rgb{0.9, 0.8, 0.7}));
  EXPECT_EQ(canvas.at(3, 3), (Rgb{0.1, 0.2, 0.3}));
}

TEST(CompositeTest, HalfAlphaMixesAndStaysInRange) {
  ImageRGB canvas(1, 1, Rgb{0.0, 1.0, 0.5});
  RgbaFragment f{ImageRGB(1, 1, Rgb{1.0, 0.0, 0.5}), Mask(1, 1, 0.5)};
  composite(canvas, f, 0, 0);
  EXPECT_NEAR(canvas.at(0, 0).r, 0.5, 1e-15);
  EXPECT_NEAR(canvas.at(0, 0).g, 0.5, 1e-15);
  EXPECT_TRUE(is_valid(canvas));
}

TEST(TransformClusterTest, IdentityTrimsThenKeeps) {
  const ColonyCluster c = disk_cluster(1, 15, {{5, 5, 4}, {9, 9, 5}});
  const ColonyCluster t = transform_cluster(c, {});
  EXPECT_EQ(t.fragment.width(), 14);  // empty first column and row removed
  EXPECT_EQ(t.member_boxes[0], (BBox{0, 0, 9, 9}));
  const ColonyCluster again = transform_cluster(t, {});
  EXPECT_EQ(again.fragment, t.fragment);
  EXPECT_EQ(again.member_boxes, t.member_boxes);
}

TEST(TransformClusterTest, BoxesStayTightUnderRotation) {
  const ColonyCluster c = disk_cluster(1, 21, {{7, 7, 5}, {13, 12, 6}});
  Rng rng(15);
  for (int i = 0; i < 50; ++i) {
    const RotateFlip t{360 * uniform01(rng), uniform_index(rng, 2) == 1, uniform_index(rng, 2) == 1};
    const ColonyCluster r = transform_cluster(c, t, 1.0);
    ASSERT_EQ(r.instance_masks.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k)
      EXPECT_EQ(r.member_boxes[k], tight_box(r.instance_masks[k])->to_bbox());
  }
}

TEST(ComposePatchTest, ZeroCountGivesBackgroundOnly) {
  GenerationConfig cfg;
  cfg.patch_size = 32;
  cfg.count_mean = 1e-9;
  const std::vector<EmptyDish> dishes = {flat_dish(60, 16)};
  Rng rng(17), replay(17);
  const SyntheticPatch p = compose_patch(cfg, small_bank(), dishes, rng);
  EXPECT_TRUE(p.info.annotations.empty());
  EXPECT_EQ(p.info.requested, 0);
  uniform_index(replay, dishes.size());
  EXPECT_EQ(p.image, crop_background(dishes[0], replay, 32).image);
}

TEST(ComposePatchTest, MultiColonyClusterAnnotationsAreTranslatedBoxes) {
  ClusterBank bank;
  bank.clusters.push_back(disk_cluster(3, 20, {{5, 5, 4}, {10, 12, 5}, {15, 6, 3}}));
  GenerationConfig cfg;
  cfg.patch_size = 128;
  cfg.count_mean = 3;
  const std::vector<EmptyDish> dishes = {flat_dish(200, 18)};
  Rng rng(19);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const SyntheticPatch p = compose_patch(cfg, bank, dishes, rng);
    ASSERT_EQ(p.info.annotations.size(), 3 * p.info.placements.size());
    for (std::size_t k = 0; k < p.info.placements.size(); ++k) {
      const Placement& pl = p.info.placements[k];
      const ColonyCluster t = transform_cluster(bank.clusters[0], pl.transform, pl.scale);
      for (std::size_t m = 0; m < 3; ++m) {
        const PatchAnnotation& a = p.info.annotations[3 * k + m];
        EXPECT_EQ(a.category_id, 3);
        EXPECT_EQ(a.bbox.x, pl.rect.x + int(t.member_boxes[m].x));
        EXPECT_EQ(a.bbox.y, pl.rect.y + int(t.member_boxes[m].y));
        EXPECT_EQ(a.bbox.w, int(t.member_boxes[m].w));
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(ComposePatchTest, AnnotationsAreTightAndPlacementsDisjoint) {
  GenerationConfig cfg;
  cfg.patch_size = 96;
  cfg.count_mean = 15;
  const std::vector<EmptyDish> dishes = {flat_dish(140, 20)};
  const ClusterBank bank = small_bank();
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const SyntheticPatch p = compose_patch(cfg, bank, dishes, rng);
    for (const PatchAnnotation& a : p.info.annotations) {
      EXPECT_EQ(rle_tight_box(a.segmentation), a.bbox);
      EXPECT_GE(a.bbox.x, 0);
      EXPECT_LE(a.bbox.right(), 96);
      EXPECT_EQ(a.category_id, p.info.species);
    }
    const auto& pl = p.info.placements;
    for (std::size_t i = 0; i < pl.size(); ++i)
      for (std::size_t j = i + 1; j < pl.size(); ++j) EXPECT_FALSE(intersects(pl[i].rect, pl[j].rect));
    EXPECT_TRUE(is_valid(p.image));
  }
}

TEST(ComposePatchTest, SpeciesHistogramIsUniform) {
  GenerationConfig cfg;
  cfg.patch_size = 16;
  cfg.count_mean = 1;
  const std::vector<EmptyDish> dishes = {flat_dish(24, 22)};
  const ClusterBank bank = small_bank();
  Rng rng(23);
  std::array<int, kSpeciesCount> hist{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++hist[compose_patch(cfg, bank, dishes, rng).info.species - 1];
  const double sigma = std::sqrt(n * 0.2 * 0.8);
  for (int h : hist) EXPECT_LT(std::abs(h - n / 5.0), 5 * sigma);
}

TEST(ComposePatchTest, MeanColonyCountNearTenForSparseSmallClusters) {
  GenerationConfig cfg;
  cfg.patch_size = 128;
  const std::vector<EmptyDish> dishes = {flat_dish(190, 24)};
  const ClusterBank bank = small_bank();
  Rng rng(25);
  double total = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) total += compose_patch(cfg, bank, dishes, rng).info.annotations.size();
  EXPECT_NEAR(total / n, 10.0, 0.5);
}

TEST(ComposePatchTest, MissingSpeciesAreNeverChosen) {
  ClusterBank bank;
  bank.clusters.push_back(disk_cluster(2, 5, {{2, 2, 2}}));
  GenerationConfig cfg;
  cfg.patch_size = 32;
  const std::vector<EmptyDish> dishes = {flat_dish(50, 26)};
  Rng rng(27);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(compose_patch(cfg, bank, dishes, rng).info.species, 2);
  cfg.species_weights = {1, 0, 1, 1, 1};
  EXPECT_THROW(compose_patch(cfg, bank, dishes, rng), std::invalid_argument);
}

TEST(ComposePatchTest, ScaleAugmentationIsOffByDefault) {
  GenerationConfig cfg;
  cfg.patch_size = 64;
  const std::vector<EmptyDish> dishes = {flat_dish(100, 28)};
  Rng rng(29);
  for (int i = 0; i < 10; ++i)
    for (const Placement& pl : compose_patch(cfg, small_bank(), dishes, rng).info.placements)
      EXPECT_EQ(pl.scale, 1.0);
}

}  // namespace
}  // namespace agarsynth
