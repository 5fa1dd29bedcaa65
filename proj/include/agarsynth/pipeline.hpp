#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "agarsynth/dataset.hpp"
#include "agarsynth/metrics.hpp"
#include "agarsynth/segmenter.hpp"

namespace agarsynth {

struct ExtractSummary {
  std::size_t images = 0;
  std::size_t clusters = 0;  // kept + discarded
  BankSummary bank;
  std::vector<std::string> warnings;  // one per discarded cluster
};

// Clusters every annotated image, segments each cluster and writes the bank.
// A cluster takes the most frequent category of its members.
ExtractSummary extract_bank(const fs::path& images_dir, const fs::path& annotations,
                            const fs::path& out_dir, double cluster_threshold,
                            const SegmentationParams& params, std::uint64_t seed, int workers);

// [{image_id, category_id, bbox:[x,y,w,h], score}]; throws ValidationError.
std::vector<Detection> read_predictions(const json& doc);

// Writes metrics.json and counts.csv to out_dir. Unknown image or category
// ids in the predictions are all listed in one ValidationError.
MetricsReport evaluate_files(const fs::path& ground_truth, const fs::path& predictions,
                             double score_thresh, const fs::path& out_dir);

inline constexpr int kSheetColumns = 4;
inline constexpr int kSheetPatches = 16;
inline constexpr int kSheetGap = 8;

// Species colors used by preview overlays, indexed by category id - 1.
Rgb species_color(int category_id);

// Renders the first n patches of a dataset into sheets of up to 16 at full
// resolution. Returns the written files.
std::vector<fs::path> render_previews(const fs::path& dataset_dir, int n, const fs::path& out_dir);

}  // namespace agarsynth
