#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "agarsynth/color.hpp"
#include "agarsynth/dataset.hpp"
#include "agarsynth/stylizer.hpp"
#include "test_util.hpp"

namespace agarsynth {
namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FeatureLayer random_layer(int c, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  FeatureLayer l(c, h, w);
  for (double& v : l.data) v = uniform01(rng) * 2 - 1;
  return l;
}

TEST(GramTest, ZeroActivationsGiveZeroMatrix) {
  const GramMatrix g = gram(FeatureLayer(3, 4, 4));
  for (double v : g.values) EXPECT_EQ(v, 0.0);
}

TEST(GramTest, ConstantSingleChannel) {
  FeatureLayer l(1, 3, 5);
  std::fill(l.data.begin(), l.data.end(), 0.7);
  EXPECT_NEAR(gram(l).at(0, 0), 0.49, 1e-15);
}

TEST(GramTest, MatchesTripleLoop) {
  const FeatureLayer l = random_layer(3, 4, 4, 1);
  const GramMatrix g = gram(l);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) s += l.at(i, y, x) * l.at(j, y, x);
      EXPECT_NEAR(g.at(i, j), s / (3 * 16), 1e-9);
    }
}

TEST(GramTest, SymmetricPositiveSemidefinite) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GramMatrix g = gram(random_layer(4, 5, 3, seed));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) EXPECT_EQ(g.at(i, j), g.at(j, i));
    // Cholesky with a tiny jitter succeeds iff no eigenvalue is meaningfully negative.
    std::vector<double> a = g.values;
    for (int i = 0; i < 4; ++i) a[i * 4 + i] += 1e-12;
    for (int j = 0; j < 4; ++j) {
      double d = a[j * 4 + j];
      for (int k = 0; k < j; ++k) d -= a[j * 4 + k] * a[j * 4 + k];
      ASSERT_GT(d, 0.0);
      a[j * 4 + j] = std::sqrt(d);
      for (int i = j + 1; i < 4; ++i) {
        double s = a[i * 4 + j];
        for (int k = 0; k < j; ++k) s -= a[i * 4 + k] * a[j * 4 + k];
        a[i * 4 + j] = s / a[j * 4 + j];
      }
    }
  }
}

TEST(StyleLossTest, ZeroWhenAllImagesEqual) {
  const ImageRGB y = testing::random_image(24, 24, 2);
  for (double lambda : {0.0, 0.02, 0.5, 1.0}) EXPECT_EQ(style_loss(y, y, y, lambda), 0.0);
}

TEST(StyleLossTest, EndpointsDropTheOtherTerm) {
  const ImageRGB y = testing::random_image(20, 20, 3);
  const ImageRGB c = testing::random_image(20, 20, 4);
  const ImageRGB s1 = testing::random_image(20, 20, 5);
  const ImageRGB s2 = testing::random_image(20, 20, 6);
  EXPECT_EQ(style_loss(y, c, s1, 0.0), style_loss(y, c, s2, 0.0));
  EXPECT_EQ(style_loss(y, s1, c, 1.0), style_loss(y, s2, c, 1.0));
  EXPECT_GT(style_loss(y, c, s1, 0.0), 0.0);
}

TEST(StyleLossTest, LinearInLambda) {
  const ImageRGB y = testing::random_image(20, 20, 7);
  const ImageRGB c = testing::random_image(20, 20, 8);
  const ImageRGB s = testing::random_image(20, 20, 9);
  const double content_term = style_loss(y, c, s, 0.0);
  const double style_term = style_loss(y, c, s, 1.0);
  for (double lambda : {0.02, 0.05, 0.3, 0.9})
    EXPECT_NEAR(style_loss(y, c, s, lambda), (1 - lambda) * content_term + lambda * style_term, 1e-12);
}

TEST(StyleLossTest, CustomExtractorIsUsed) {
  const FeatureExtractor mean_only = [](const ImageRGB& img) {
    FeatureLayer l(1, 1, 1);
    for (const Rgb& p : img.pixels()) l.data[0] += p.r / img.size();
    return FeatureMaps{l};
  };
  const ImageRGB a(4, 4, Rgb{0.5, 0, 0}), b(4, 4, Rgb{0.3, 0, 0});
  EXPECT_NEAR(style_loss(a, b, a, 0.0, mean_only), 0.25 - 0.09, 1e-15);
  EXPECT_THROW(style_loss(a, b, a, 1.5, mean_only), std::invalid_argument);
}

TEST(DefaultExtractorTest, Deterministic) {
  const ImageRGB img = testing::random_image(33, 29, 10);
  EXPECT_EQ(default_extractor(img), default_extractor(img));
  const FeatureMaps f = default_extractor(img);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[0].channels, kExtractorFilters);
  EXPECT_EQ(f[0].width, 31);
  EXPECT_EQ(f[1].width, 14);
  EXPECT_EQ(f[2].width, 6);
}

TEST(DefaultExtractorTest, ConstantImageGivesSpatiallyConstantFeatures) {
  const FeatureMaps f = default_extractor(ImageRGB(16, 16, Rgb{0.3, 0.6, 0.2}));
  for (const FeatureLayer& l : f)
    for (int c = 0; c < l.channels; ++c)
      for (int y = 0; y < l.height; ++y)
        for (int x = 0; x < l.width; ++x) EXPECT_EQ(l.at(c, y, x), l.at(c, 0, 0));
}

TEST(DefaultExtractorTest, MatchesHandConvolution) {
  const ImageRGB img = testing::random_image(5, 5, 11);
  const FeatureMaps f = default_extractor(img);
  ASSERT_EQ(f[0].height, 3);
  for (int k = 0; k < kExtractorFilters; ++k) {
    const ConvFilter& flt = default_filters()[k];
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) {
        double s = flt.bias;
        for (int dy = 0; dy < 3; ++dy)
          for (int dx = 0; dx < 3; ++dx) {
            const Rgb& p = img.at(x + dx, y + dy);
            s += flt.weights[dy * 3 + dx] * p.r + flt.weights[9 + dy * 3 + dx] * p.g +
                 flt.weights[18 + dy * 3 + dx] * p.b;
          }
        EXPECT_NEAR(f[0].at(k, y, x), std::max(s, 0.0), 1e-9);
      }
  }
}

TEST(ColorTransferTest, ZeroStrengthIsIdentity) {
  const ImageRGB c = testing::random_image(12, 12, 12);
  EXPECT_EQ(color_transfer_lab(c, testing::random_image(8, 8, 13), 0.0), c);
}

TEST(ColorTransferTest, FullStrengthMatchesStyleMoments) {
  const ImageLab c = rgb_to_lab(testing::random_image(30, 30, 14));
  const ImageLab s = rgb_to_lab(testing::random_image(20, 25, 15));
  const LabMoments sm = lab_moments(s);
  const LabMoments out = lab_moments(transfer_moments(c, lab_moments(c), sm, 1.0));
  for (int ch = 0; ch < 3; ++ch) {
    EXPECT_NEAR(out.mean[ch], sm.mean[ch], 1e-3);
    EXPECT_NEAR(out.stddev[ch], sm.stddev[ch], 1e-3);
  }
}

TEST(ColorTransferTest, GrayContentWarmStyleFollowsInterpolation) {
  ImageRGB gray = testing::random_image(16, 16, 16);
  for (Rgb& p : gray.pixels()) p = {p.r * 0.4 + 0.3, p.r * 0.4 + 0.3, p.r * 0.4 + 0.3};
  ImageRGB warm = testing::random_image(16, 16, 17);
  for (Rgb& p : warm.pixels()) p = {0.8 + 0.2 * p.r, 0.5 + 0.2 * p.g, 0.2 + 0.1 * p.b};
  const ImageLab cl = rgb_to_lab(gray);
  const LabMoments cm = lab_moments(cl), sm = lab_moments(rgb_to_lab(warm));
  const double k = 0.4;
  const LabMoments out = lab_moments(transfer_moments(cl, cm, sm, k));
  for (int ch = 0; ch < 3; ++ch) {
    EXPECT_NEAR(out.mean[ch], cm.mean[ch] + k * (sm.mean[ch] - cm.mean[ch]), 1e-9);
    if (cm.stddev[ch] > 1e-9)
      EXPECT_NEAR(out.stddev[ch], cm.stddev[ch] + k * (sm.stddev[ch] - cm.stddev[ch]), 1e-9);
  }
}

TEST(TilePlanTest, EightPatchesMakeTwoTiles) {
  const auto tiles = plan_tiles(8, 1, 20);
  ASSERT_EQ(tiles.size(), 2u);
  EXPECT_EQ(tiles[0].patches, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(tiles[1].patches, (std::vector<std::size_t>{4, 5, 6, 7}));
}

TEST(TilePlanTest, ShortTailRepeatsLastPatch) {
  const auto tiles = plan_tiles(9, 1, 20);
  ASSERT_EQ(tiles.size(), 3u);
  EXPECT_EQ(tiles[2].patches, (std::vector<std::size_t>{8, 8, 8, 8}));
}

TEST(TilePlanTest, StyleAssignmentReproducible) {
  std::vector<std::size_t> a, b;
  for (std::size_t i = 0; i < 40; ++i) a.push_back(style_for(123, i, 20));
  for (std::size_t i = 0; i < 40; ++i) b.push_back(style_for(123, i, 20));
  EXPECT_EQ(a, b);
  std::set<std::size_t> distinct(a.begin(), a.end());
  EXPECT_GT(distinct.size(), 5u);
  for (std::size_t s : a) EXPECT_LT(s, 20u);
}

TEST(TileTest, AssembleSplitRoundTrip) {
  std::vector<ImageRGB> p;
  for (int k = 0; k < 4; ++k) p.push_back(testing::random_image(6, 6, 20 + k));
  const ImageRGB tile = assemble_tile({&p[0], &p[1], &p[2], &p[3]});
  EXPECT_EQ(tile.width(), 12);
  EXPECT_EQ(tile.at(6, 0), p[1].at(0, 0));
  EXPECT_EQ(tile.at(0, 6), p[2].at(0, 0));
  EXPECT_EQ(split_tile(tile, 6), p);
}

class StylizeDatasetTest : public ::testing::Test {
 protected:
  void SetUp() override {
    in_ = testing::scratch_dir("stylize_in");
    styles_ = testing::scratch_dir("stylize_styles");
    json images = json::array();
    for (int i = 0; i < n_; ++i) {
      write_png(in_ / "images" / patch_file_name(i), testing::random_image(16, 16, 100 + i));
      images.push_back({{"id", i + 1}, {"file_name", patch_file_name(i)}, {"width", 16}, {"height", 16}});
    }
    write_json(in_ / "annotations.json",
               {{"images", images}, {"categories", json::array()}, {"annotations", json::array()}});
    for (int s = 0; s < 20; ++s)
      write_png(styles_ / fmt::format("style_{:02}.png", s), testing::random_image(8, 8, 300 + s));
    bank_ = read_style_bank(styles_);
  }

  fs::path in_, styles_;
  StyleBank bank_;
  int n_ = 9;
};

TEST_F(StylizeDatasetTest, RawIsBitwisePassThrough) {
  const fs::path out = testing::scratch_dir("stylize_raw");
  stylize_dataset(in_, out, bank_, {});
  for (int i = 0; i < n_; ++i)
    EXPECT_EQ(slurp(out / "images" / patch_file_name(i)), slurp(in_ / "images" / patch_file_name(i)));
  EXPECT_EQ(slurp(out / "annotations.json"), slurp(in_ / "annotations.json"));
}

TEST_F(StylizeDatasetTest, BuiltInModesKeepAnnotationsAndSizes) {
  for (StyleMode mode : {StyleMode::Semi, StyleMode::Full}) {
    const fs::path out = testing::scratch_dir("stylize_builtin");
    StylizeOptions o;
    o.mode = mode;
    o.seed = 4;
    o.workers = 2;
    const StylizeSummary s = stylize_dataset(in_, out, bank_, o);
    EXPECT_EQ(slurp(out / "annotations.json"), slurp(in_ / "annotations.json"));
    for (int i = 0; i < n_; ++i) {
      const ImageRGB img = read_png_rgb(out / "images" / patch_file_name(i));
      EXPECT_EQ(img.width(), 16);
      EXPECT_EQ(s.style_ids[i], style_for(4, i, 20));
    }
    const json prov = read_json(out / "stylization.json");
    EXPECT_EQ(prov["patches"][3]["style_id"], bank_.ids[style_for(4, 3, 20)]);
  }
}

TEST_F(StylizeDatasetTest, FullShiftsMoreThanSemi) {
  StylizeOptions o;
  o.seed = 2;
  o.mode = StyleMode::Semi;
  const fs::path semi = testing::scratch_dir("stylize_semi");
  stylize_dataset(in_, semi, bank_, o);
  o.mode = StyleMode::Full;
  const fs::path full = testing::scratch_dir("stylize_full");
  stylize_dataset(in_, full, bank_, o);
  const ImageRGB orig = read_png_rgb(in_ / "images" / patch_file_name(0));
  const ImageRGB a = read_png_rgb(semi / "images" / patch_file_name(0));
  const ImageRGB b = read_png_rgb(full / "images" / patch_file_name(0));
  const LabMoments m0 = lab_moments(rgb_to_lab(orig)), ma = lab_moments(rgb_to_lab(a)),
                   mb = lab_moments(rgb_to_lab(b));
  EXPECT_GT(std::abs(mb.mean[0] - m0.mean[0]) + std::abs(mb.mean[2] - m0.mean[2]),
            std::abs(ma.mean[0] - m0.mean[0]) + std::abs(ma.mean[2] - m0.mean[2]));
}

TEST_F(StylizeDatasetTest, ExternalModeTilesFourPatchesPerJob) {
  const fs::path out = testing::scratch_dir("stylize_ext");
  const fs::path log = out.parent_path() / "agarsynth_fake_bridge.log";
  fs::remove(log);
  setenv("FAKE_BRIDGE_LOG", log.c_str(), 1);
  StylizeOptions o;
  o.mode = StyleMode::External;
  o.lambda = 0.02;
  o.bridge = FAKE_BRIDGE_PATH;
  o.bridge_jobs = 2;
  const StylizeSummary s = stylize_dataset(in_, out, bank_, o);
  unsetenv("FAKE_BRIDGE_LOG");
  EXPECT_EQ(s.jobs, 3u);

  int logged = 0;
  std::ifstream in(log);
  for (std::string line; std::getline(in, line);) ++logged;
  EXPECT_EQ(logged, 3);

  const json job = read_json(out / "bridge" / "jobs" / "tile_000000.json");
  EXPECT_EQ(job["lambda"].get<double>(), 0.02);
  const ImageRGB tile = read_png_rgb(job["content"].get<std::string>());
  EXPECT_EQ(tile.width(), 32);
  EXPECT_EQ(tile.height(), 32);

  // The fake bridge inverts colours, so each patch must come back inverted in place.
  for (int i = 0; i < n_; ++i) {
    const ImageRGB a = read_png_rgb(in_ / "images" / patch_file_name(i));
    const ImageRGB b = read_png_rgb(out / "images" / patch_file_name(i));
    for (std::size_t p = 0; p < a.size(); ++p) ASSERT_NEAR(b[p].r, 1.0 - a[p].r, 1e-12) << i;
  }
  EXPECT_EQ(slurp(out / "annotations.json"), slurp(in_ / "annotations.json"));
}

TEST_F(StylizeDatasetTest, ExternalWithoutBridgeSuggestsBuiltInModes) {
  unsetenv("AGARSYNTH_BRIDGE");
  StylizeOptions o;
  o.mode = StyleMode::External;
  try {
    stylize_dataset(in_, testing::scratch_dir("stylize_nobridge"), bank_, o);
    FAIL() << "expected BridgeError";
  } catch (const BridgeError& e) {
    EXPECT_NE(std::string(e.what()).find("built-in mode"), std::string::npos);
  }
  o.bridge = "/nonexistent/bridge";
  EXPECT_THROW(stylize_dataset(in_, testing::scratch_dir("stylize_nobridge"), bank_, o), BridgeError);
}

TEST_F(StylizeDatasetTest, FailingBridgeIsAnError) {
  setenv("FAKE_BRIDGE_FAIL", "1", 1);
  StylizeOptions o;
  o.mode = StyleMode::External;
  o.bridge = FAKE_BRIDGE_PATH;
  EXPECT_THROW(stylize_dataset(in_, testing::scratch_dir("stylize_fail"), bank_, o), BridgeError);
  unsetenv("FAKE_BRIDGE_FAIL");
}

TEST_F(StylizeDatasetTest, BridgeFromEnvironment) {
  setenv("AGARSYNTH_BRIDGE", FAKE_BRIDGE_PATH, 1);
  StylizeOptions o;
  o.mode = StyleMode::External;
  EXPECT_EQ(stylize_dataset(in_, testing::scratch_dir("stylize_env"), bank_, o).jobs, 3u);
  unsetenv("AGARSYNTH_BRIDGE");
}

TEST(StyleModeTest, ParseNames) {
  EXPECT_EQ(parse_style_mode("semi"), StyleMode::Semi);
  EXPECT_EQ(parse_style_mode("external"), StyleMode::External);
  EXPECT_FALSE(parse_style_mode("neural"));
  EXPECT_STREQ(style_mode_name(StyleMode::Full), "full");
}

}  // namespace
}  // namespace agarsynth
