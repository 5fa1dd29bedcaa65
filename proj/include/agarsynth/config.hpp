#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agarsynth/composer.hpp"
#include "agarsynth/segmenter.hpp"
#include "agarsynth/stylizer.hpp"

namespace agarsynth {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PathsConfig {
  std::filesystem::path images = "images";
  std::filesystem::path annotations = "annotations.json";
  std::filesystem::path clusters = "out/clusters";
  std::filesystem::path dishes = "dishes";
  std::filesystem::path dataset = "out/dataset";
  std::filesystem::path styles = "styles";
  std::filesystem::path stylized = "out/stylized";
  std::filesystem::path predictions = "predictions.json";
  std::filesystem::path ground_truth;  // empty: <dataset>/annotations.json
  std::filesystem::path report = "out/report";
  std::filesystem::path preview = "out/preview";
};

struct PipelineConfig {
  double cluster_threshold = 0.01;
  SegmentationParams segmentation;
  GenerationConfig generation;
  StylizeOptions stylize;  // seed and workers come from the run section
  double score_threshold = 0.5;
  int preview_count = 16;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string log_level = "info";
  PathsConfig paths;
};

struct ParameterInfo {
  std::string key;  // section.name
  bool paper = false;
  std::string doc;
};

// Every recognised key, in file order.
const std::vector<ParameterInfo>& parameter_table();

// Relative paths are resolved against base_dir. overrides are
// "section.key=value" strings with TOML values; bare words are taken as
// strings.
PipelineConfig parse_config(const std::string& toml_text, const std::filesystem::path& base_dir,
                            std::span<const std::string> overrides = {});
PipelineConfig load_config(const std::filesystem::path& file,
                           std::span<const std::string> overrides = {});

nlohmann::json config_to_json(const PipelineConfig& cfg);

}  // namespace agarsynth
