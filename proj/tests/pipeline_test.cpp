#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "agarsynth/pipeline.hpp"
#include "test_util.hpp"

using namespace agarsynth;
namespace fs = std::filesystem;
namespace tu = agarsynth::testing;

namespace {

const fs::path kFixtures = AGARSYNTH_FIXTURE_DIR;

struct Disk {
  double cx, cy, r;
  int species;
};

// Writes one plate image with the given colonies plus its COCO file.
void write_plate(const fs::path& dir, const std::vector<Disk>& disks) {
  ImageRGB img(160, 120, Rgb{0.72, 0.58, 0.36});
  json anns = json::array();
  int id = 1;
  for (const Disk& d : disks) {
    const Mask m = tu::disk_mask(160, 120, d.cx, d.cy, d.r);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i] > 0) img[i] = {0.95, 0.92, 0.84};
    anns.push_back({{"id", id++},
                    {"image_id", 1},
                    {"category_id", d.species},
                    {"bbox", {d.cx - d.r, d.cy - d.r, 2 * d.r + 1, 2 * d.r + 1}}});
  }
  fs::create_directories(dir);
  write_png(dir / "plate.png", img);
  write_json(dir / "ann.json",
             {{"images", {{{"id", 1}, {"file_name", "plate.png"}, {"width", 160}, {"height", 120}}}},
              {"annotations", anns}});
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb) return false;
  for (const fs::path& f : fa)
    if (slurp(a / f) != slurp(b / f)) return false;
  return true;
}

}  // namespace

TEST(Extract, DisjointColoniesGiveSingletons) {
  const fs::path dir = tu::scratch_dir("extract_disjoint");
  write_plate(dir, {{30, 30, 8, 1}, {80, 60, 9, 1}, {130, 90, 7, 2}});
  const ExtractSummary s = extract_bank(dir, dir / "ann.json", dir / "bank", 0.01, {}, 1, 1);
  EXPECT_EQ(s.clusters, 3u);
  EXPECT_EQ(s.bank.kept[0], 2u);
  EXPECT_EQ(s.bank.kept[1], 1u);
  const ClusterBank bank = read_cluster_bank(dir / "bank");
  ASSERT_EQ(bank.clusters.size(), 3u);
  for (const ColonyCluster& c : bank.clusters) EXPECT_EQ(c.instance_masks.size(), 1u);
}

TEST(Extract, OverlappingColoniesFormOneCluster) {
  const fs::path dir = tu::scratch_dir("extract_overlap");
  write_plate(dir, {{60, 60, 10, 3}, {76, 60, 10, 3}});
  const ExtractSummary s = extract_bank(dir, dir / "ann.json", dir / "bank", 0.01, {}, 1, 1);
  EXPECT_EQ(s.clusters, 1u);
  const ClusterBank bank = read_cluster_bank(dir / "bank");
  ASSERT_EQ(bank.clusters.size(), 1u);
  EXPECT_EQ(bank.clusters[0].member_boxes.size(), 2u);
  EXPECT_EQ(bank.clusters[0].instance_masks.size(), 2u);
  EXPECT_EQ(bank.clusters[0].species, 3);
}

TEST(Extract, MajoritySpeciesLabelsCluster) {
  const fs::path dir = tu::scratch_dir("extract_majority");
  write_plate(dir, {{60, 60, 10, 4}, {76, 60, 10, 2}, {68, 72, 9, 4}});
  extract_bank(dir, dir / "ann.json", dir / "bank", 0.01, {}, 1, 1);
  const ClusterBank bank = read_cluster_bank(dir / "bank");
  ASSERT_EQ(bank.clusters.size(), 1u);
  EXPECT_EQ(bank.clusters[0].species, 4);
}

TEST(Extract, BankIsBitwiseReproducible) {
  const fs::path dir = tu::scratch_dir("extract_repro");
  extract_bank(kFixtures / "plates", kFixtures / "plates" / "annotations.json", dir / "a", 0.01, {}, 5, 1);
  extract_bank(kFixtures / "plates", kFixtures / "plates" / "annotations.json", dir / "b", 0.01, {}, 5, 3);
  extract_bank(kFixtures / "plates", kFixtures / "plates" / "annotations.json", dir / "c", 0.01, {}, 5, 1);
  EXPECT_TRUE(same_tree(dir / "a", dir / "b"));
  EXPECT_TRUE(same_tree(dir / "a", dir / "c"));
}

TEST(Extract, BadInputs) {
  const fs::path dir = tu::scratch_dir("extract_bad");
  write_plate(dir, {{60, 60, 10, 7}});
  EXPECT_THROW(extract_bank(dir, dir / "ann.json", dir / "bank", 0.01, {}, 1, 1), ValidationError);
  write_plate(dir, {{60, 60, 10, 1}});
  fs::remove(dir / "plate.png");
  EXPECT_THROW(extract_bank(dir, dir / "ann.json", dir / "bank", 0.01, {}, 1, 1), IoError);
  EXPECT_THROW(extract_bank(dir, dir / "none.json", dir / "bank", 0.01, {}, 1, 1), IoError);
}

TEST(Extract, FlatClusterIsDiscardedWithWarning) {
  const fs::path dir = tu::scratch_dir("extract_flat");
  write_plate(dir, {{40, 40, 8, 1}});
  // A second box over bare agar.
  json ann = read_json(dir / "ann.json");
  ann["annotations"].push_back({{"id", 2}, {"image_id", 1}, {"category_id", 2}, {"bbox", {110, 70, 20, 20}}});
  write_json(dir / "ann.json", ann);
  const ExtractSummary s = extract_bank(dir, dir / "ann.json", dir / "bank", 0.01, {}, 1, 1);
  EXPECT_EQ(s.bank.kept[0], 1u);
  EXPECT_EQ(s.bank.discarded[1], 1u);
  EXPECT_EQ(s.warnings.size(), 1u);
}

TEST(Predictions, ParseAndReject) {
  const json ok = json::parse(R"([{"image_id":1,"category_id":2,"bbox":[1,2,3,4],"score":0.5}])");
  const auto d = read_predictions(ok);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].box, (BBox{1, 2, 3, 4}));
  EXPECT_THROW(read_predictions(json::object()), ValidationError);
  EXPECT_THROW(read_predictions(json::parse(R"([{"image_id":1,"bbox":[1,2,3,4],"score":1}])")),
               ValidationError);
  EXPECT_THROW(read_predictions(json::parse(R"([{"image_id":1,"category_id":1,"bbox":[1,2,3],"score":1}])")),
               ValidationError);
}

class DatasetFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = tu::scratch_dir("pipeline_dataset");
    extract_bank(kFixtures / "plates", kFixtures / "plates" / "annotations.json", root_ / "bank", 0.01,
                 {}, 3, 2);
    GenerationConfig cfg;
    cfg.patch_size = 256;
    cfg.n_patches = 6;
    cfg.seed = 4;
    generate_dataset(cfg, read_cluster_bank(root_ / "bank"), read_dish_bank(kFixtures / "dishes"),
                     root_ / "data", 2);
  }
  static fs::path root_;
};
fs::path DatasetFixture::root_;

TEST_F(DatasetFixture, PatchSizeOverrideKeepsBoxesInBounds) {
  const json doc = read_json(root_ / "data" / "annotations.json");
  validate_annotation_file(doc);
  for (const json& img : doc["images"]) {
    EXPECT_EQ(img["width"], 256);
    const ImageRGB px = read_png_rgb(root_ / "data" / "images" / img["file_name"].get<std::string>());
    EXPECT_EQ(px.width(), 256);
    EXPECT_EQ(px.height(), 256);
  }
  for (const json& a : doc["annotations"]) {
    const auto b = a["bbox"];
    EXPECT_GE(b[0].get<int>(), 0);
    EXPECT_GE(b[1].get<int>(), 0);
    EXPECT_LE(b[0].get<int>() + b[2].get<int>(), 256);
    EXPECT_LE(b[1].get<int>() + b[3].get<int>(), 256);
  }
}

TEST_F(DatasetFixture, PerfectPredictionsScorePerfectly) {
  const json doc = read_json(root_ / "data" / "annotations.json");
  json preds = json::array();
  for (const json& a : doc["annotations"])
    preds.push_back({{"image_id", a["image_id"]}, {"category_id", a["category_id"]}, {"bbox", a["bbox"]},
                     {"score", 1.0}});
  const fs::path dir = tu::scratch_dir("pipeline_eval");
  write_json(dir / "pred.json", preds);
  const MetricsReport r = evaluate_files(root_ / "data" / "annotations.json", dir / "pred.json", 0.5, dir / "out");
  EXPECT_EQ(r.detection.map, 1.0);
  EXPECT_EQ(r.counting.mae, 0.0);
  EXPECT_EQ(r.counting.smape, 0.0);
  const json m = read_json(dir / "out" / "metrics.json");
  EXPECT_EQ(m["map"], 1.0);
  EXPECT_TRUE(fs::exists(dir / "out" / "counts.csv"));
}

TEST_F(DatasetFixture, EmptyPredictions) {
  const json doc = read_json(root_ / "data" / "annotations.json");
  const fs::path dir = tu::scratch_dir("pipeline_eval_empty");
  write_json(dir / "pred.json", json::array());
  const MetricsReport r = evaluate_files(root_ / "data" / "annotations.json", dir / "pred.json", 0.5, dir / "out");
  EXPECT_EQ(r.detection.map, 0.0);
  EXPECT_DOUBLE_EQ(r.counting.mae, double(doc["annotations"].size()) / doc["images"].size());
}

TEST_F(DatasetFixture, MismatchedIdsAreListed) {
  const fs::path dir = tu::scratch_dir("pipeline_eval_bad");
  write_json(dir / "pred.json", json::parse(R"([
    {"image_id":1,"category_id":1,"bbox":[0,0,5,5],"score":1},
    {"image_id":77,"category_id":1,"bbox":[0,0,5,5],"score":1},
    {"image_id":78,"category_id":12,"bbox":[0,0,5,5],"score":1}])"));
  try {
    evaluate_files(root_ / "data" / "annotations.json", dir / "pred.json", 0.5, dir / "out");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("image_id 77"), std::string::npos);
    EXPECT_NE(msg.find("image_id 78"), std::string::npos);
    EXPECT_NE(msg.find("category_id 12"), std::string::npos);
  }
}

TEST_F(DatasetFixture, PreviewZeroWritesNothing) {
  const fs::path out = tu::scratch_dir("preview_zero") / "sheets";
  EXPECT_TRUE(render_previews(root_ / "data", 0, out).empty());
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(DatasetFixture, PreviewSheetsAndOverlayCoordinates) {
  const fs::path out = tu::scratch_dir("preview_four");
  const auto files = render_previews(root_ / "data", 4, out);
  ASSERT_EQ(files.size(), 1u);
  const ImageRGB sheet = read_png_rgb(files[0]);
  EXPECT_EQ(sheet.width(), 4 * 256 + 5 * kSheetGap);
  EXPECT_EQ(sheet.height(), 256 + 2 * kSheetGap);
  EXPECT_EQ(render_previews(root_ / "data", 40, tu::scratch_dir("preview_all")).size(), 1u);

  const json doc = read_json(root_ / "data" / "annotations.json");
  int checked = 0;
  for (const json& a : doc["annotations"]) {
    const int slot = a["image_id"].get<int>() - 1;
    if (slot >= 4) continue;
    const int ox = kSheetGap + slot * (256 + kSheetGap), oy = kSheetGap;
    const int x = a["bbox"][0], y = a["bbox"][1], w = a["bbox"][2], h = a["bbox"][3];
    const Rgb want = species_color(a["category_id"]);
    for (auto [px, py] : {std::pair{x, y}, std::pair{x + w - 1, y + h - 1}, std::pair{x + w / 2, y}}) {
      const Rgb got = sheet.at(ox + px, oy + py);
      EXPECT_EQ(to_byte(got.r), to_byte(want.r));
      EXPECT_EQ(to_byte(got.g), to_byte(want.g));
      EXPECT_EQ(to_byte(got.b), to_byte(want.b));
    }
    ++checked;
  }
  EXPECT_GT(checked, 0);
}
