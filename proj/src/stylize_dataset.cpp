#include <fmt/format.h>
#include <omp.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <map>

#include "agarsynth/dataset.hpp"
#include "agarsynth/stylizer.hpp"

extern char** environ;

namespace agarsynth {

namespace {

constexpr std::uint64_t kStyleStream = 0x57;

fs::path find_bridge(const StylizeOptions& opts) {
  fs::path bridge = opts.bridge;
  if (bridge.empty()) {
    const char* env = std::getenv("AGARSYNTH_BRIDGE");
    if (env && *env) bridge = env;
  }
  if (bridge.empty())
    throw BridgeError(
        "external stylization needs the neural stylizer: set AGARSYNTH_BRIDGE to its "
        "executable, or use a built-in mode (raw, semi, full)");
  if (access(bridge.c_str(), X_OK) != 0)
    throw BridgeError("AGARSYNTH_BRIDGE=" + bridge.string() +
                      " is not an executable file; fix the path or use a built-in mode "
                      "(raw, semi, full)");
  return bridge;
}

pid_t spawn_bridge(const fs::path& bridge, const fs::path& job) {
  std::string exe = bridge.string(), arg = job.string();
  char* argv[] = {exe.data(), arg.data(), nullptr};
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, exe.c_str(), nullptr, nullptr, argv, environ);
  if (rc != 0) throw BridgeError(fmt::format("cannot start bridge {}: error {}", exe, rc));
  return pid;
}

// Runs one bridge process per job with at most `limit` alive at once.
void run_jobs(const fs::path& bridge, const std::vector<fs::path>& jobs, int limit) {
  std::map<pid_t, std::size_t> running;
  std::vector<std::string> failures;
  std::size_t next = 0;
  while (next < jobs.size() || !running.empty()) {
    while (next < jobs.size() && static_cast<int>(running.size()) < std::max(limit, 1)) {
      running[spawn_bridge(bridge, jobs[next])] = next;
      ++next;
    }
    int status = 0;
    const pid_t pid = waitpid(-1, &status, 0);
    if (pid < 0) throw BridgeError("waitpid failed while running bridge jobs");
    const auto it = running.find(pid);
    if (it == running.end()) continue;
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
      failures.push_back(fmt::format("{} (status {})", jobs[it->second].filename().string(),
                                     WIFEXITED(status) ? WEXITSTATUS(status) : -1));
    running.erase(it);
  }
  if (!failures.empty()) {
    std::string msg = "bridge job(s) failed:";
    for (const auto& f : failures) msg += " " + f;
    throw BridgeError(msg);
  }
}

}  // namespace

std::optional<StyleMode> parse_style_mode(const std::string& name) {
  if (name == "raw") return StyleMode::Raw;
  if (name == "semi") return StyleMode::Semi;
  if (name == "full") return StyleMode::Full;
  if (name == "external") return StyleMode::External;
  return std::nullopt;
}

const char* style_mode_name(StyleMode mode) {
  switch (mode) {
    case StyleMode::Raw: return "raw";
    case StyleMode::Semi: return "semi";
    case StyleMode::Full: return "full";
    case StyleMode::External: return "external";
  }
  return "?";
}

StyleBank read_style_bank(const fs::path& dir) {
  StyleBank bank;
  for (const fs::path& p : list_pngs(dir)) {
    bank.ids.push_back(p.stem().string());
    bank.paths.push_back(fs::absolute(p));
    bank.images.push_back(read_png_rgb(p));
  }
  if (bank.size() == 0) throw IoError("no style images in " + dir.string());
  return bank;
}

std::size_t style_for(std::uint64_t seed, std::size_t i, std::size_t bank_size) {
  Rng rng(derive_seed(seed, {kStyleStream, i}));
  return uniform_index(rng, bank_size);
}

std::vector<TileJob> plan_tiles(std::size_t n_patches, std::uint64_t seed, std::size_t bank_size) {
  std::vector<TileJob> tiles;
  for (std::size_t first = 0; first < n_patches; first += 4) {
    TileJob t;
    for (std::size_t k = 0; k < 4; ++k) t.patches.push_back(std::min(first + k, n_patches - 1));
    t.style = style_for(seed, tiles.size(), bank_size);
    tiles.push_back(std::move(t));
  }
  return tiles;
}

ImageRGB assemble_tile(const std::vector<const ImageRGB*>& patches) {
  if (patches.size() != 4) throw std::invalid_argument("a tile holds exactly 4 patches");
  const int p = patches[0]->width();
  for (const ImageRGB* img : patches)
    if (img->width() != p || img->height() != p)
      throw std::invalid_argument("tile patches must be equal squares");
  ImageRGB tile(2 * p, 2 * p);
  for (int k = 0; k < 4; ++k) {
    const int ox = (k % 2) * p, oy = (k / 2) * p;
    for (int y = 0; y < p; ++y)
      for (int x = 0; x < p; ++x) tile.at(ox + x, oy + y) = patches[k]->at(x, y);
  }
  return tile;
}

std::vector<ImageRGB> split_tile(const ImageRGB& tile, int patch_size) {
  if (tile.width() != 2 * patch_size || tile.height() != 2 * patch_size)
    throw std::invalid_argument(fmt::format("tile is {}x{}, expected {}x{}", tile.width(),
                                            tile.height(), 2 * patch_size, 2 * patch_size));
  std::vector<ImageRGB> out;
  for (int k = 0; k < 4; ++k) {
    ImageRGB p(patch_size, patch_size);
    const int ox = (k % 2) * patch_size, oy = (k / 2) * patch_size;
    for (int y = 0; y < patch_size; ++y)
      for (int x = 0; x < patch_size; ++x) p.at(x, y) = tile.at(ox + x, oy + y);
    out.push_back(std::move(p));
  }
  return out;
}

StylizeSummary stylize_dataset(const fs::path& in_dir, const fs::path& out_dir,
                               const StyleBank& bank, const StylizeOptions& opts) {
  if (fs::exists(out_dir) && fs::equivalent(in_dir, out_dir))
    throw std::invalid_argument("stylization output must differ from its input");
  const json ann = read_json(in_dir / "annotations.json");
  std::vector<std::string> files;
  try {
    for (const json& img : ann.at("images")) files.push_back(img.at("file_name").get<std::string>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("annotations.json: ") + e.what());
  }
  if (opts.mode != StyleMode::Raw && bank.size() == 0) throw std::invalid_argument("style bank is empty");
  fs::create_directories(out_dir / "images");

  const int n = static_cast<int>(files.size());
  StylizeSummary summary;
  summary.patches = files.size();
  json provenance = {{"mode", style_mode_name(opts.mode)}, {"seed", opts.seed},
                     {"styles", bank.ids}};

  if (opts.mode == StyleMode::Raw) {
    for (const std::string& f : files)
      fs::copy_file(in_dir / "images" / f, out_dir / "images" / f,
                    fs::copy_options::overwrite_existing);
  } else if (opts.mode != StyleMode::External) {
    const double strength = opts.mode == StyleMode::Semi ? opts.semi_strength : opts.full_strength;
    provenance["strength"] = strength;
    summary.style_ids.resize(n);
    std::vector<std::string> errors(n);
    omp_set_max_active_levels(1);
#pragma omp parallel for num_threads(std::max(opts.workers, 1)) schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
      try {
        const std::size_t s = style_for(opts.seed, i, bank.size());
        summary.style_ids[i] = s;
        const ImageRGB img = read_png_rgb(in_dir / "images" / files[i]);
        write_png(out_dir / "images" / files[i], color_transfer_lab(img, bank.images[s], strength));
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (int i = 0; i < n; ++i)
      if (!errors[i].empty()) throw IoError(files[i] + ": " + errors[i]);
  } else {
    const fs::path bridge = find_bridge(opts);
    const fs::path work = fs::absolute(out_dir / "bridge");
    fs::create_directories(work / "tiles");
    fs::create_directories(work / "jobs");
    fs::create_directories(work / "outputs");
    const std::vector<TileJob> tiles = plan_tiles(files.size(), opts.seed, bank.size());
    std::vector<fs::path> jobs, outputs;
    int patch_size = 0;
    json tile_log = json::array();
    for (std::size_t t = 0; t < tiles.size(); ++t) {
      std::vector<ImageRGB> imgs;
      for (std::size_t i : tiles[t].patches) imgs.push_back(read_png_rgb(in_dir / "images" / files[i]));
      std::vector<const ImageRGB*> ptrs;
      for (const ImageRGB& im : imgs) ptrs.push_back(&im);
      const ImageRGB tile = assemble_tile(ptrs);
      if (patch_size && imgs[0].width() != patch_size)
        throw ValidationError("external stylization needs equally sized patches");
      patch_size = imgs[0].width();
      const std::string stem = fmt::format("tile_{:06}", t);
      const fs::path content = work / "tiles" / (stem + ".png");
      const fs::path output = work / "outputs" / (stem + ".png");
      write_png(content, tile);
      fs::remove(output);
      const fs::path job = work / "jobs" / (stem + ".json");
      write_json(job, {{"content", content.string()},
                       {"style", bank.paths[tiles[t].style].string()},
                       {"lambda", opts.lambda},
                       {"output", output.string()}},
                 2);
      jobs.push_back(job);
      outputs.push_back(output);
      tile_log.push_back({{"patches", tiles[t].patches}, {"style_id", tiles[t].style}});
    }
    run_jobs(bridge, jobs, opts.bridge_jobs);
    summary.jobs = jobs.size();
    summary.style_ids.resize(n);
    for (std::size_t t = 0; t < tiles.size(); ++t) {
      if (!fs::exists(outputs[t]))
        throw BridgeError("bridge reported success but wrote no " + outputs[t].string());
      ImageRGB out;
      try {
        out = read_png_rgb(outputs[t]);
      } catch (const IoError& e) {
        throw BridgeError(e.what());
      }
      std::vector<ImageRGB> parts;
      try {
        parts = split_tile(out, patch_size);
      } catch (const std::invalid_argument& e) {
        throw BridgeError(outputs[t].string() + ": " + e.what());
      }
      for (std::size_t k = 0; k < 4; ++k) {
        const std::size_t i = tiles[t].patches[k];
        if (k > 0 && i == tiles[t].patches[k - 1]) continue;  // padding
        write_png(out_dir / "images" / files[i], parts[k]);
        summary.style_ids[i] = tiles[t].style;
      }
    }
    provenance["lambda"] = opts.lambda;
    provenance["tiles"] = tile_log;
  }

  json per_patch = json::array();
  for (int i = 0; i < n; ++i) {
    json entry = {{"file_name", files[i]}};
    if (opts.mode != StyleMode::Raw) entry["style_id"] = bank.ids[summary.style_ids[i]];
    per_patch.push_back(entry);
  }
  provenance["patches"] = per_patch;
  fs::copy_file(in_dir / "annotations.json", out_dir / "annotations.json",
                fs::copy_options::overwrite_existing);
  if (fs::exists(in_dir / "manifest.json"))
    fs::copy_file(in_dir / "manifest.json", out_dir / "manifest.json",
                  fs::copy_options::overwrite_existing);
  write_json(out_dir / "stylization.json", provenance, 2);
  return summary;
}

}  // namespace agarsynth
