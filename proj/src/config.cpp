#include "agarsynth/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "tomlplusplus/toml.hpp"

namespace agarsynth {

namespace fs = std::filesystem;

namespace {

using Weights = std::array<double, kSpeciesCount>;
using Target = std::variant<double*, int*, bool*, std::string*, std::uint64_t*, fs::path*, Weights*,
                            StyleMode*>;

template <class F>
void visit_params(PipelineConfig& c, F&& f) {
  SegmentationParams& s = c.segmentation;
  GenerationConfig& g = c.generation;
  StylizeOptions& st = c.stylize;
  PathsConfig& p = c.paths;
  f("clustering.threshold", true, "overlap fraction above which two boxes join a cluster",
    Target{&c.cluster_threshold});
  f("unsharp.radius", true, "unsharp mask gaussian sigma", Target{&s.unsharp_radius});
  f("unsharp.amount", true, "unsharp mask gain", Target{&s.unsharp_amount});
  f("artifacts.l_threshold", true, "dark artifact: L below this", Target{&s.artifact_l});
  f("artifacts.b_threshold", true, "dark artifact: b below this", Target{&s.artifact_b});
  f("artifacts.dilation", true, "artifact mask dilation radius", Target{&s.artifact_dilation});
  f("denoise.h", true, "NL-means filtering strength", Target{&s.denoise_h});
  f("denoise.patch", true, "NL-means patch size (odd)", Target{&s.denoise_patch});
  f("denoise.window", false, "NL-means search window (odd)", Target{&s.denoise_window});
  f("chan_vese.mu", true, "Chan-Vese length weight", Target{&s.cv_mu});
  f("chan_vese.max_iter", true, "Chan-Vese iteration cap", Target{&s.cv_max_iter});
  f("segmentation.margin", true, "dilation of the Chan-Vese mask", Target{&s.margin});
  f("segmentation.blend_scale", true, "Lab distance at which the blending mask saturates",
    Target{&s.blend_scale});
  f("segmentation.crop_margin", false, "context pixels around a cluster crop",
    Target{&s.crop_margin});
  f("segmentation.walk_max_steps", false, "random-walk inpainting step cap",
    Target{&s.walk_max_steps});
  f("generation.patch_size", false, "patch side in pixels", Target{&g.patch_size});
  f("generation.count_mean", false, "mean of the exponential colony count",
    Target{&g.count_mean});
  f("generation.max_place_attempts", false, "placement tries per cluster",
    Target{&g.max_place_attempts});
  f("generation.species_weights", false, "sampling weight per species id 1..5",
    Target{&g.species_weights});
  f("generation.n_patches", false, "patches to generate", Target{&g.n_patches});
  f("generation.mixed_species", false, "draw clusters of any species into one patch",
    Target{&g.mixed_species});
  f("generation.scale_augment", false, "random cluster scaling", Target{&g.scale_augment});
  f("generation.scale_min", false, "smallest scale factor", Target{&g.scale_min});
  f("generation.scale_max", false, "largest scale factor", Target{&g.scale_max});
  f("stylize.lambda", true, "style weight passed to the external stylizer", Target{&st.lambda});
  f("stylize.mode", false, "raw, semi, full or external", Target{&st.mode});
  f("stylize.semi_strength", false, "color transfer strength for semi", Target{&st.semi_strength});
  f("stylize.full_strength", false, "color transfer strength for full", Target{&st.full_strength});
  f("stylize.bridge_jobs", false, "concurrent external stylizer processes",
    Target{&st.bridge_jobs});
  f("stylize.bridge", false, "external stylizer executable (else AGARSYNTH_BRIDGE)",
    Target{&st.bridge});
  f("evaluate.score_threshold", false, "detections counted at or above this score",
    Target{&c.score_threshold});
  f("preview.n", false, "patches rendered into contact sheets", Target{&c.preview_count});
  f("run.seed", false, "master seed", Target{&c.seed});
  f("run.workers", false, "worker threads", Target{&c.workers});
  f("run.log_level", false, "trace, debug, info, warn or error", Target{&c.log_level});
  f("paths.images", false, "input images for extract", Target{&p.images});
  f("paths.annotations", false, "COCO annotations of the input images", Target{&p.annotations});
  f("paths.clusters", false, "cluster bank directory", Target{&p.clusters});
  f("paths.dishes", false, "empty dish images", Target{&p.dishes});
  f("paths.dataset", false, "generated dataset", Target{&p.dataset});
  f("paths.styles", false, "style images", Target{&p.styles});
  f("paths.stylized", false, "stylized dataset", Target{&p.stylized});
  f("paths.predictions", false, "detector output for evaluate", Target{&p.predictions});
  f("paths.ground_truth", false, "ground truth for evaluate (default: dataset annotations)",
    Target{&p.ground_truth});
  f("paths.report", false, "evaluation output directory", Target{&p.report});
  f("paths.preview", false, "contact sheet directory", Target{&p.preview});
}

std::string node_kind(const toml::node& n) {
  std::ostringstream os;
  os << n.type();
  return os.str();
}

// Assigns one TOML value; returns an error message or an empty string.
std::string assign(const Target& target, const toml::node& node) {
  return std::visit(
      [&](auto* ptr) -> std::string {
        using T = std::remove_pointer_t<decltype(ptr)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!node.is_number()) return "expected a number, got " + node_kind(node);
          *ptr = *node.value<double>();
        } else if constexpr (std::is_same_v<T, int>) {
          if (!node.is_integer()) return "expected an integer, got " + node_kind(node);
          const std::int64_t v = *node.value<std::int64_t>();
          if (v < INT32_MIN || v > INT32_MAX) return "integer out of range";
          *ptr = static_cast<int>(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          if (!node.is_boolean()) return "expected true or false, got " + node_kind(node);
          *ptr = *node.value<bool>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          if (!node.is_integer()) return "expected an integer, got " + node_kind(node);
          const std::int64_t v = *node.value<std::int64_t>();
          if (v < 0) return "expected a non-negative integer";
          *ptr = static_cast<std::uint64_t>(v);
        } else if constexpr (std::is_same_v<T, std::string> || std::is_same_v<T, fs::path>) {
          if (!node.is_string()) return "expected a string, got " + node_kind(node);
          *ptr = *node.value<std::string>();
        } else if constexpr (std::is_same_v<T, StyleMode>) {
          if (!node.is_string()) return "expected a string, got " + node_kind(node);
          const auto mode = parse_style_mode(*node.value<std::string>());
          if (!mode) return "unknown mode '" + *node.value<std::string>() + "'";
          *ptr = *mode;
        } else {
          const toml::array* arr = node.as_array();
          if (!arr || arr->size() != kSpeciesCount)
            return fmt::format("expected an array of {} numbers", kSpeciesCount);
          for (std::size_t i = 0; i < kSpeciesCount; ++i) {
            if (!(*arr)[i].is_number()) return "expected an array of numbers";
            (*ptr)[i] = *(*arr)[i].value<double>();
          }
        }
        return {};
      },
      target);
}

void apply_table(const toml::table& tbl, PipelineConfig& cfg, const std::string& origin,
                 std::vector<std::string>& errors) {
  std::map<std::string, Target> targets;
  std::set<std::string> sections;
  visit_params(cfg, [&](const char* key, bool, const char*, Target t) {
    targets.emplace(key, t);
    sections.insert(std::string(key).substr(0, std::string(key).find('.')));
  });
  for (const auto& [sec_name, sec_node] : tbl) {
    const std::string sec(sec_name.str());
    const toml::table* sec_tbl = sec_node.as_table();
    if (!sec_tbl || !sections.count(sec)) {
      errors.push_back(fmt::format("{}: unknown section '{}'", origin, sec));
      continue;
    }
    for (const auto& [key_name, node] : *sec_tbl) {
      const std::string key = sec + "." + std::string(key_name.str());
      const auto it = targets.find(key);
      if (it == targets.end()) {
        errors.push_back(fmt::format("{}: unknown key '{}'", origin, key));
        continue;
      }
      if (std::string err = assign(it->second, node); !err.empty())
        errors.push_back(fmt::format("{}: {}: {}", origin, key, err));
    }
  }
}

toml::table parse_override(const std::string& text) {
  const auto eq = text.find('=');
  const auto dot = text.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override '" + text + "' is not of the form section.key=value");
  const std::string section = text.substr(0, dot);
  const std::string key = text.substr(dot + 1, eq - dot - 1);
  const std::string value = text.substr(eq + 1);
  try {
    return toml::parse(fmt::format("[{}]\n{} = {}\n", section, key, value));
  } catch (const toml::parse_error&) {
    toml::table t;
    toml::table sec;
    sec.insert(key, value);
    t.insert(section, std::move(sec));
    return t;
  }
}

void validate(const PipelineConfig& c, std::vector<std::string>& errors) {
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  const SegmentationParams& s = c.segmentation;
  const GenerationConfig& g = c.generation;
  check(c.cluster_threshold >= 0 && c.cluster_threshold < 1, "clustering.threshold must be in [0, 1)");
  check(s.unsharp_radius > 0, "unsharp.radius must be > 0");
  check(s.unsharp_amount >= 0, "unsharp.amount must be >= 0");
  check(s.artifact_dilation >= 0, "artifacts.dilation must be >= 0");
  check(s.denoise_h > 0, "denoise.h must be > 0");
  check(s.denoise_patch > 0 && s.denoise_patch % 2 == 1, "denoise.patch must be odd and > 0");
  check(s.denoise_window > 0 && s.denoise_window % 2 == 1, "denoise.window must be odd and > 0");
  check(s.cv_mu >= 0, "chan_vese.mu must be >= 0");
  check(s.cv_max_iter > 0, "chan_vese.max_iter must be > 0");
  check(s.margin >= 0, "segmentation.margin must be >= 0");
  check(s.blend_scale > 0, "segmentation.blend_scale must be > 0");
  check(s.crop_margin >= 0, "segmentation.crop_margin must be >= 0");
  check(s.walk_max_steps > 0, "segmentation.walk_max_steps must be > 0");
  check(g.patch_size > 0, "generation.patch_size must be > 0");
  check(g.count_mean > 0, "generation.count_mean must be > 0");
  check(g.max_place_attempts > 0, "generation.max_place_attempts must be > 0");
  check(g.n_patches >= 0, "generation.n_patches must be >= 0");
  double wsum = 0;
  bool wneg = false;
  for (double w : g.species_weights) wsum += w, wneg |= w < 0;
  check(!wneg && wsum > 0, "generation.species_weights must be >= 0 and not all zero");
  check(g.scale_min > 0 && g.scale_min <= g.scale_max,
        "generation.scale_min must be > 0 and <= generation.scale_max");
  check(c.stylize.lambda >= 0 && c.stylize.lambda <= 1, "stylize.lambda must be in [0, 1]");
  check(c.stylize.semi_strength >= 0 && c.stylize.semi_strength <= 1,
        "stylize.semi_strength must be in [0, 1]");
  check(c.stylize.full_strength >= 0 && c.stylize.full_strength <= 1,
        "stylize.full_strength must be in [0, 1]");
  check(c.stylize.bridge_jobs > 0, "stylize.bridge_jobs must be > 0");
  check(c.score_threshold >= 0 && c.score_threshold <= 1, "evaluate.score_threshold must be in [0, 1]");
  check(c.preview_count >= 0, "preview.n must be >= 0");
  check(c.workers > 0, "run.workers must be > 0");
  static const std::set<std::string> levels = {"trace", "debug", "info", "warn", "error", "off"};
  check(levels.count(c.log_level) > 0, "run.log_level must be one of trace, debug, info, warn, error, off");
}

}  // namespace

const std::vector<ParameterInfo>& parameter_table() {
  static const std::vector<ParameterInfo> table = [] {
    std::vector<ParameterInfo> t;
    PipelineConfig dummy;
    visit_params(dummy, [&](const char* key, bool paper, const char* doc, Target) {
      t.push_back({key, paper, doc});
    });
    return t;
  }();
  return table;
}

PipelineConfig parse_config(const std::string& toml_text, const fs::path& base_dir,
                            std::span<const std::string> overrides) {
  toml::table tbl;
  try {
    tbl = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(os.str());
  }
  PipelineConfig cfg;
  std::vector<std::string> errors;
  apply_table(tbl, cfg, "config", errors);
  for (const std::string& o : overrides) apply_table(parse_override(o), cfg, "--set " + o, errors);
  validate(cfg, errors);
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  visit_params(cfg, [&](const char*, bool, const char*, Target t) {
    if (auto** p = std::get_if<fs::path*>(&t); p && !(*p)->empty() && (*p)->is_relative())
      **p = (base_dir / **p).lexically_normal();
  });
  return cfg;
}

PipelineConfig load_config(const fs::path& file, std::span<const std::string> overrides) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::absolute(file).parent_path(), overrides);
}

nlohmann::json config_to_json(const PipelineConfig& cfg) {
  nlohmann::json out = nlohmann::json::object();
  PipelineConfig copy = cfg;
  visit_params(copy, [&](const char* key, bool, const char*, Target t) {
    const std::string k(key);
    const std::string sec = k.substr(0, k.find('.')), name = k.substr(k.find('.') + 1);
    nlohmann::json& slot = out[sec][name];
    std::visit(
        [&](auto* ptr) {
          using T = std::remove_pointer_t<decltype(ptr)>;
          if constexpr (std::is_same_v<T, fs::path>)
            slot = ptr->string();
          else if constexpr (std::is_same_v<T, StyleMode>)
            slot = style_mode_name(*ptr);
          else
            slot = *ptr;
        },
        t);
  });
  return out;
}

}  // namespace agarsynth
