#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "agarsynth/composer.hpp"
#include "agarsynth/png_io.hpp"

namespace agarsynth {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Malformed or inconsistent dataset files.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json(const fs::path& path);
// Writes via a temporary file and rename so readers never see partial files.
void write_json(const fs::path& path, const json& doc, int indent = -1);

json rle_to_json(const Rle& rle);
Rle rle_from_json(const json& j);
json patch_info_to_json(const PatchInfo& info);
PatchInfo patch_info_from_json(const json& j);

std::string patch_file_name(std::size_t index);

// COCO-style annotation file; annotation ids follow patch order.
json build_annotation_file(std::span<const PatchInfo> patches, int patch_size,
                           std::span<const EmptyDish> dishes);

// Throws ValidationError listing every problem found.
void validate_annotation_file(const json& doc);

struct AnnotatedImage {
  int id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::vector<BBox> boxes;
  std::vector<int> categories;
};

// Reads images and boxes of a COCO-style file (segmentations are ignored).
std::vector<AnnotatedImage> read_coco_boxes(const json& doc);

struct DatasetSummary {
  int n_patches = 0;
  int short_patches = 0;
  std::size_t annotations = 0;
  std::array<int, kSpeciesCount> patches_per_species{};
  std::array<std::size_t, kSpeciesCount> colonies_per_species{};
  double mean_colonies = 0.0;
  int resumed = 0;  // patches reused from an earlier interrupted run
};

// Writes images/patch_NNNNNN.png, annotations.json and manifest.json under
// out_dir. Completed patches are recorded as shards so an interrupted run can
// resume.
DatasetSummary generate_dataset(const GenerationConfig& cfg, const ClusterBank& bank,
                                std::span<const EmptyDish> dishes, const fs::path& out_dir,
                                int workers, const json& config_echo = json::object());

// Cluster bank: cluster_NNNNNN.png (RGBA) + cluster_NNNNNN.json sidecars and
// an index.json with per-species counts.
struct BankSummary {
  std::array<std::size_t, kSpeciesCount> kept{};
  std::array<std::size_t, kSpeciesCount> discarded{};
};
void write_cluster_bank(const fs::path& dir, const ClusterBank& bank,
                        const BankSummary& summary);
ClusterBank read_cluster_bank(const fs::path& dir);

// PNG files in name order; an optional <stem>.json sidecar gives the usable
// region, otherwise the whole image is usable.
std::vector<EmptyDish> read_dish_bank(const fs::path& dir);
json region_to_json(const UsableRegion& region);

std::vector<fs::path> list_pngs(const fs::path& dir);

}  // namespace agarsynth
