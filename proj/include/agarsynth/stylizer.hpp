#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "agarsynth/raster.hpp"

namespace agarsynth {

// One layer of activations, stored channel-major: data[(c * height + y) * width + x].
struct FeatureLayer {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  FeatureLayer() = default;
  FeatureLayer(int c, int h, int w) : channels(c), height(h), width(w), data(std::size_t(c) * h * w) {}
  double& at(int c, int y, int x) { return data[(std::size_t(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(std::size_t(c) * height + y) * width + x]; }
  friend bool operator==(const FeatureLayer&, const FeatureLayer&) = default;
};

using FeatureMaps = std::vector<FeatureLayer>;
using FeatureExtractor = std::function<FeatureMaps(const ImageRGB&)>;

struct GramMatrix {
  int size = 0;
  std::vector<double> values;  // row-major size x size
  double at(int i, int j) const { return values[std::size_t(i) * size + j]; }
};

// G = F F^T / (C H W) with F the C x (H W) unrolled activations.
GramMatrix gram(const FeatureLayer& layer);
double frobenius_distance(const GramMatrix& a, const GramMatrix& b);

// Sum over layers of (1 - lambda) |G(y) - G(y_c)| + lambda |G(y) - G(y_s)|.
double style_loss(const ImageRGB& y, const ImageRGB& y_c, const ImageRGB& y_s,
                  double lambda, const FeatureExtractor& extractor);
double style_loss(const ImageRGB& y, const ImageRGB& y_c, const ImageRGB& y_s, double lambda);

inline constexpr int kExtractorFilters = 8;
inline constexpr int kExtractorScales = 3;

struct ConvFilter {
  std::array<double, 27> weights{};  // [channel][dy][dx]
  double bias = 0.0;
};

// Fixed filters of the default extractor (same on every run and platform).
const std::array<ConvFilter, kExtractorFilters>& default_filters();

// 3x3 valid convolution with the default filters followed by ReLU, at the
// input resolution and after each of two 2x2 average poolings.
FeatureMaps default_extractor(const ImageRGB& img);
ImageRGB average_pool2(const ImageRGB& img);

struct LabMoments {
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{};
};

LabMoments lab_moments(const ImageLab& img);

// Lab channels of content moved toward the style moments; no gamut clamping.
ImageLab transfer_moments(const ImageLab& content, const LabMoments& content_m,
                          const LabMoments& style_m, double strength);

ImageRGB color_transfer_lab(const ImageRGB& content, const ImageRGB& style, double strength);

// ---- dataset stylization ----

enum class StyleMode { Raw, Semi, Full, External };

std::optional<StyleMode> parse_style_mode(const std::string& name);
const char* style_mode_name(StyleMode mode);

struct StyleBank {
  std::vector<std::string> ids;
  std::vector<std::filesystem::path> paths;
  std::vector<ImageRGB> images;

  std::size_t size() const { return ids.size(); }
};

StyleBank read_style_bank(const std::filesystem::path& dir);

struct StylizeOptions {
  StyleMode mode = StyleMode::Raw;
  double semi_strength = 0.4;
  double full_strength = 0.8;
  double lambda = 0.05;  // style weight sent to the external bridge
  std::uint64_t seed = 0;
  int workers = 1;
  int bridge_jobs = 1;                  // concurrent bridge processes
  std::filesystem::path bridge;         // empty: taken from AGARSYNTH_BRIDGE
};

struct BridgeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Style used for patch i (built-in modes) or tile i (external mode).
std::size_t style_for(std::uint64_t seed, std::size_t i, std::size_t bank_size);

struct TileJob {
  std::vector<std::size_t> patches;  // 4 entries; short tails repeat the last patch
  std::size_t style = 0;
};

std::vector<TileJob> plan_tiles(std::size_t n_patches, std::uint64_t seed, std::size_t bank_size);

ImageRGB assemble_tile(const std::vector<const ImageRGB*>& patches);
std::vector<ImageRGB> split_tile(const ImageRGB& tile, int patch_size);

struct StylizeSummary {
  std::size_t patches = 0;
  std::size_t jobs = 0;  // external bridge invocations
  std::vector<std::size_t> style_ids;
};

// Reads in_dir/annotations.json, writes stylized images to out_dir/images,
// copies annotations.json unchanged and records per-patch style ids in
// out_dir/stylization.json.
StylizeSummary stylize_dataset(const std::filesystem::path& in_dir,
                               const std::filesystem::path& out_dir, const StyleBank& bank,
                               const StylizeOptions& opts);

}  // namespace agarsynth
