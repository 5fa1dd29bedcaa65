// agarsynth command line: extract | generate | stylize | evaluate | preview.
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <optional>

#include "agarsynth/config.hpp"
#include "agarsynth/pipeline.hpp"
#include "cli11/CLI11.hpp"

namespace fs = std::filesystem;
using namespace agarsynth;

namespace {

enum Exit { kOk = 0, kFatal = 1, kInvalid = 2 };

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::vector<std::string> sets;
};

void run_extract(const PipelineConfig& cfg) {
  const auto& p = cfg.paths;
  spdlog::info("extracting clusters from {} ({})", p.images.string(), p.annotations.string());
  const ExtractSummary s = extract_bank(p.images, p.annotations, p.clusters, cfg.cluster_threshold,
                                        cfg.segmentation, cfg.seed, cfg.workers);
  for (const std::string& w : s.warnings) spdlog::warn("discarded {}", w);
  for (int k = 0; k < kSpeciesCount; ++k)
    if (s.bank.kept[k] + s.bank.discarded[k] > 0)
      spdlog::info("{}: kept {}, discarded {}", kSpeciesNames[k], s.bank.kept[k], s.bank.discarded[k]);
  spdlog::info("{} images, {} clusters -> {}", s.images, s.clusters, p.clusters.string());
}

void run_generate(const PipelineConfig& cfg) {
  const auto& p = cfg.paths;
  const ClusterBank bank = read_cluster_bank(p.clusters);
  const std::vector<EmptyDish> dishes = read_dish_bank(p.dishes);
  GenerationConfig gen = cfg.generation;
  gen.seed = cfg.seed;
  spdlog::info("generating {} patches of {}px from {} clusters and {} dishes", gen.n_patches,
               gen.patch_size, bank.clusters.size(), dishes.size());
  const DatasetSummary s = generate_dataset(gen, bank, dishes, p.dataset, cfg.workers, config_to_json(cfg));
  validate_annotation_file(read_json(p.dataset / "annotations.json"));
  if (s.resumed > 0) spdlog::info("resumed {} patches from an earlier run", s.resumed);
  if (s.short_patches > 0)
    spdlog::warn("{} patches hold fewer colonies than drawn", s.short_patches);
  spdlog::info("{} patches, {} annotations, {:.2f} colonies per patch -> {}", s.n_patches,
               s.annotations, s.mean_colonies, p.dataset.string());
}

void run_stylize(const PipelineConfig& cfg) {
  const auto& p = cfg.paths;
  StylizeOptions opts = cfg.stylize;
  opts.seed = cfg.seed;
  opts.workers = cfg.workers;
  StyleBank bank;
  if (opts.mode != StyleMode::Raw) bank = read_style_bank(p.styles);
  spdlog::info("stylizing {} ({} mode, {} styles)", p.dataset.string(), style_mode_name(opts.mode),
               bank.size());
  const StylizeSummary s = stylize_dataset(p.dataset, p.stylized, bank, opts);
  if (s.jobs > 0) spdlog::info("{} bridge jobs", s.jobs);
  spdlog::info("{} patches -> {}", s.patches, p.stylized.string());
}

void run_evaluate(const PipelineConfig& cfg) {
  const auto& p = cfg.paths;
  const fs::path gt = p.ground_truth.empty() ? p.dataset / "annotations.json" : p.ground_truth;
  const MetricsReport r = evaluate_files(gt, p.predictions, cfg.score_threshold, p.report);
  spdlog::info("mAP {:.4f}  MAE {:.4f}  sMAPE {:.2f}% over {} images -> {}", r.detection.map,
               r.counting.mae, r.counting.smape, r.pairs.size(), p.report.string());
}

void run_preview(const PipelineConfig& cfg) {
  const auto files = render_previews(cfg.paths.dataset, cfg.preview_count, cfg.paths.preview);
  for (const fs::path& f : files) spdlog::info("wrote {}", f.string());
  if (files.empty()) spdlog::info("nothing to render");
}

PipelineConfig resolve(const std::string& command, const Args& args) {
  PipelineConfig cfg = load_config(args.config, args.sets);
  if (args.seed) cfg.seed = *args.seed;
  if (args.workers) {
    if (*args.workers < 1) throw ConfigError("--workers must be >= 1");
    cfg.workers = *args.workers;
  }
  if (args.out) {
    const fs::path out = fs::absolute(*args.out).lexically_normal();
    if (command == "extract") cfg.paths.clusters = out;
    else if (command == "generate") cfg.paths.dataset = out;
    else if (command == "stylize") cfg.paths.stylized = out;
    else if (command == "evaluate") cfg.paths.report = out;
    else if (command == "preview") cfg.paths.preview = out;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("agarsynth");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

  CLI::App app{"Synthetic Petri-dish dataset generator"};
  app.require_subcommand(1);
  Args args;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"extract", "segment colony clusters from annotated images into a cluster bank"},
      {"generate", "compose synthetic patches from a cluster bank and empty dishes"},
      {"stylize", "restyle a generated dataset (raw, semi, full or external)"},
      {"evaluate", "score detector predictions against ground truth"},
      {"preview", "render contact sheets of annotated patches"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "TOML configuration file")->required();
    sub->add_option("--seed", args.seed, "master seed (overrides run.seed)");
    sub->add_option("--workers", args.workers, "worker threads (overrides run.workers)");
    sub->add_option("--out", args.out, "output directory for this command");
    sub->add_option("--set", args.sets, "override a config value, e.g. --set generation.n_patches=10");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kFatal;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const PipelineConfig cfg = resolve(command, args);
    spdlog::set_level(spdlog::level::from_str(cfg.log_level));
    spdlog::info("{} seed={} workers={}", command, cfg.seed, cfg.workers);
    spdlog::info("config {}", config_to_json(cfg).dump());
    if (command == "extract") run_extract(cfg);
    else if (command == "generate") run_generate(cfg);
    else if (command == "stylize") run_stylize(cfg);
    else if (command == "evaluate") run_evaluate(cfg);
    else run_preview(cfg);
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFatal;
  }
  return kOk;
}
