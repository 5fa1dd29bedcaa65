#include "agarsynth/dataset.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace agarsynth {

namespace {

json rect_json(const PixelRect& r) { return json::array({r.x, r.y, r.w, r.h}); }

PixelRect rect_from(const json& j) {
  return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

fs::path shard_path(const fs::path& out_dir, std::size_t index) {
  return out_dir / "shards" / fmt::format("patch_{:06}.json", index);
}

}  // namespace

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc, int indent) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << doc.dump(indent) << '\n';
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

json rle_to_json(const Rle& rle) {
  return {{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

Rle rle_from_json(const json& j) {
  Rle r;
  r.height = j.at("size").at(0).get<int>();
  r.width = j.at("size").at(1).get<int>();
  r.counts = j.at("counts").get<std::vector<std::uint32_t>>();
  return r;
}

json patch_info_to_json(const PatchInfo& info) {
  json placements = json::array();
  for (const Placement& p : info.placements) {
    placements.push_back({{"cluster", p.cluster},
                          {"rect", rect_json(p.rect)},
                          {"angle", p.transform.angle},
                          {"flip_h", p.transform.flip_h},
                          {"flip_v", p.transform.flip_v},
                          {"scale", p.scale}});
  }
  json anns = json::array();
  for (const PatchAnnotation& a : info.annotations) {
    anns.push_back({{"category_id", a.category_id},
                    {"bbox", rect_json(a.bbox)},
                    {"segmentation", rle_to_json(a.segmentation)}});
  }
  return {{"index", info.index},       {"seed", info.seed},
          {"dish", info.dish},         {"background_angle", info.background_angle},
          {"species", info.species},   {"requested", info.requested},
          {"placements", placements},  {"annotations", anns}};
}

PatchInfo patch_info_from_json(const json& j) {
  PatchInfo info;
  info.index = j.at("index").get<std::size_t>();
  info.seed = j.at("seed").get<std::uint64_t>();
  info.dish = j.at("dish").get<std::size_t>();
  info.background_angle = j.at("background_angle").get<double>();
  info.species = j.at("species").get<int>();
  info.requested = j.at("requested").get<int>();
  for (const json& p : j.at("placements")) {
    Placement pl;
    pl.cluster = p.at("cluster").get<std::size_t>();
    pl.rect = rect_from(p.at("rect"));
    pl.transform = {p.at("angle").get<double>(), p.at("flip_h").get<bool>(),
                    p.at("flip_v").get<bool>()};
    pl.scale = p.at("scale").get<double>();
    info.placements.push_back(pl);
  }
  for (const json& a : j.at("annotations")) {
    info.annotations.push_back({a.at("category_id").get<int>(), rect_from(a.at("bbox")),
                                rle_from_json(a.at("segmentation"))});
  }
  return info;
}

std::string patch_file_name(std::size_t index) {
  return fmt::format("patch_{:06}.png", index);
}

json build_annotation_file(std::span<const PatchInfo> patches, int patch_size,
                           std::span<const EmptyDish> dishes) {
  json images = json::array(), anns = json::array(), cats = json::array();
  for (int s = 0; s < kSpeciesCount; ++s) cats.push_back({{"id", s + 1}, {"name", kSpeciesNames[s]}});
  std::size_t ann_id = 1;
  for (const PatchInfo& p : patches) {
    const std::size_t image_id = p.index + 1;
    json placements = json::array();
    for (const Placement& pl : p.placements) {
      placements.push_back({{"cluster", pl.cluster},
                            {"bbox", rect_json(pl.rect)},
                            {"angle", pl.transform.angle},
                            {"flip_h", pl.transform.flip_h},
                            {"flip_v", pl.transform.flip_v},
                            {"scale", pl.scale}});
    }
    images.push_back({{"id", image_id},
                      {"file_name", patch_file_name(p.index)},
                      {"width", patch_size},
                      {"height", patch_size},
                      {"dish_id", p.dish < dishes.size() ? dishes[p.dish].id : std::to_string(p.dish)},
                      {"seed", p.seed},
                      {"species", p.species},
                      {"requested_count", p.requested},
                      {"background_angle", p.background_angle},
                      {"placements", placements}});
    for (const PatchAnnotation& a : p.annotations) {
      anns.push_back({{"id", ann_id++},
                      {"image_id", image_id},
                      {"category_id", a.category_id},
                      {"bbox", rect_json(a.bbox)},
                      {"segmentation", rle_to_json(a.segmentation)},
                      {"area", rle_area(a.segmentation)},
                      {"iscrowd", 0}});
    }
  }
  return {{"images", images}, {"categories", cats}, {"annotations", anns}};
}

void validate_annotation_file(const json& doc) {
  std::vector<std::string> problems;
  auto fail = [&](std::string msg) { problems.push_back(std::move(msg)); };
  try {
    std::map<long, std::pair<int, int>> image_size;
    for (const json& img : doc.at("images")) {
      const long id = img.at("id").get<long>();
      if (!image_size.emplace(id, std::pair{img.at("width").get<int>(), img.at("height").get<int>()}).second)
        fail(fmt::format("duplicate image id {}", id));
    }
    std::set<long> cats;
    for (const json& c : doc.at("categories")) cats.insert(c.at("id").get<long>());
    std::set<long> ann_ids;
    for (const json& a : doc.at("annotations")) {
      const long id = a.at("id").get<long>();
      if (!ann_ids.insert(id).second) fail(fmt::format("duplicate annotation id {}", id));
      const auto img = image_size.find(a.at("image_id").get<long>());
      if (img == image_size.end()) {
        fail(fmt::format("annotation {}: unknown image_id", id));
        continue;
      }
      if (!cats.count(a.at("category_id").get<long>()))
        fail(fmt::format("annotation {}: unknown category_id", id));
      const PixelRect box = rect_from(a.at("bbox"));
      const auto [w, h] = img->second;
      if (box.x < 0 || box.y < 0 || box.right() > w || box.bottom() > h || box.empty())
        fail(fmt::format("annotation {}: bbox outside image", id));
      if (!a.contains("segmentation")) continue;
      const Rle rle = rle_from_json(a.at("segmentation"));
      if (rle.width != w || rle.height != h) fail(fmt::format("annotation {}: mask size mismatch", id));
      const auto tight = rle_tight_box(rle);
      if (!tight || !(*tight == box)) fail(fmt::format("annotation {}: bbox is not the mask's tight box", id));
      const auto area = rle_area(rle);
      if (area == 0 || a.at("area").get<std::uint64_t>() != area)
        fail(fmt::format("annotation {}: bad area", id));
    }
  } catch (const json::exception& e) {
    fail(std::string("schema: ") + e.what());
  }
  if (!problems.empty()) {
    std::string msg = fmt::format("{} problem(s) in annotation file:", problems.size());
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
}

std::vector<AnnotatedImage> read_coco_boxes(const json& doc) {
  std::vector<AnnotatedImage> out;
  std::map<long, std::size_t> by_id;
  try {
    for (const json& img : doc.at("images")) {
      AnnotatedImage a;
      a.id = img.at("id").get<int>();
      a.file_name = img.at("file_name").get<std::string>();
      a.width = img.value("width", 0);
      a.height = img.value("height", 0);
      if (!by_id.emplace(a.id, out.size()).second)
        throw ValidationError(fmt::format("duplicate image id {}", a.id));
      out.push_back(std::move(a));
    }
    for (const json& a : doc.at("annotations")) {
      const auto it = by_id.find(a.at("image_id").get<long>());
      if (it == by_id.end())
        throw ValidationError(fmt::format("annotation refers to unknown image {}", a.at("image_id").dump()));
      const json& b = a.at("bbox");
      out[it->second].boxes.push_back(
          {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()});
      out[it->second].categories.push_back(a.at("category_id").get<int>());
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("annotation schema: ") + e.what());
  }
  return out;
}

DatasetSummary generate_dataset(const GenerationConfig& cfg, const ClusterBank& bank,
                                std::span<const EmptyDish> dishes, const fs::path& out_dir,
                                int workers, const json& config_echo) {
  if (cfg.n_patches < 0) throw std::invalid_argument("n_patches must be >= 0");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (bank.clusters.empty()) throw std::invalid_argument("cluster bank is empty");
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "shards");

  const int n = cfg.n_patches;
  std::vector<PatchInfo> infos(n);
  std::vector<char> done(n, 0), resumed(n, 0);
  std::vector<std::string> errors(n);

  // Kernels called per patch must not open their own thread teams.
  omp_set_max_active_levels(1);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      const std::uint64_t seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(i)});
      const fs::path shard = shard_path(out_dir, i);
      const fs::path image = out_dir / "images" / patch_file_name(i);
      if (fs::exists(shard) && fs::exists(image)) {
        PatchInfo prev = patch_info_from_json(read_json(shard));
        if (prev.seed == seed && prev.index == static_cast<std::size_t>(i)) {
          infos[i] = std::move(prev);
          done[i] = resumed[i] = 1;
          continue;
        }
      }
      Rng rng(seed);
      SyntheticPatch patch = compose_patch(cfg, bank, dishes, rng);
      patch.info.index = i;
      patch.info.seed = seed;
      write_png(image, patch.image);
      write_json(shard, patch_info_to_json(patch.info));
      infos[i] = std::move(patch.info);
      done[i] = 1;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }

  DatasetSummary summary;
  summary.n_patches = n;
  json completed = json::array();
  std::string first_error;
  for (int i = 0; i < n; ++i) {
    if (!done[i]) {
      if (first_error.empty()) first_error = fmt::format("patch {}: {}", i, errors[i]);
      continue;
    }
    completed.push_back(i);
    summary.resumed += resumed[i];
    const PatchInfo& p = infos[i];
    if (static_cast<int>(p.annotations.size()) < p.requested) ++summary.short_patches;
    if (p.species > 0) ++summary.patches_per_species[p.species - 1];
    for (const auto& a : p.annotations) ++summary.colonies_per_species[a.category_id - 1];
    summary.annotations += p.annotations.size();
  }
  summary.mean_colonies = n ? double(summary.annotations) / n : 0.0;

  json per_class = json::object();
  for (int s = 0; s < kSpeciesCount; ++s)
    per_class[kSpeciesNames[s]] = {{"patches", summary.patches_per_species[s]},
                                   {"colonies", summary.colonies_per_species[s]}};
  json manifest = {{"config", config_echo},
                   {"seed", cfg.seed},
                   {"n_patches", n},
                   {"patch_size", cfg.patch_size},
                   {"completed", completed},
                   {"complete", first_error.empty()},
                   {"per_class", per_class},
                   {"annotations", summary.annotations},
                   {"mean_colonies_per_patch", summary.mean_colonies},
                   {"short_patches", summary.short_patches},
                   {"discarded_clusters", bank.discarded}};
  write_json(out_dir / "manifest.json", manifest, 2);
  if (!first_error.empty())
    throw IoError(first_error + " (completed patches are kept; rerun to resume)");

  write_json(out_dir / "annotations.json", build_annotation_file(infos, cfg.patch_size, dishes));
  return summary;
}

void write_cluster_bank(const fs::path& dir, const ClusterBank& bank,
                        const BankSummary& summary) {
  fs::create_directories(dir);
  json entries = json::array();
  for (std::size_t i = 0; i < bank.clusters.size(); ++i) {
    const ColonyCluster& c = bank.clusters[i];
    const std::string stem = fmt::format("cluster_{:06}", i);
    write_png(dir / (stem + ".png"), c.fragment);
    json boxes = json::array(), masks = json::array();
    for (const BBox& b : c.member_boxes) boxes.push_back({b.x, b.y, b.w, b.h});
    for (const Mask& m : c.instance_masks) masks.push_back(rle_to_json(rle_encode(m)));
    write_json(dir / (stem + ".json"),
               {{"species", c.species}, {"member_boxes", boxes}, {"instance_masks", masks}});
    entries.push_back({{"file", stem + ".png"}, {"species", c.species}, {"members", boxes.size()}});
  }
  json per_species = json::object();
  for (int s = 0; s < kSpeciesCount; ++s)
    per_species[kSpeciesNames[s]] = {{"kept", summary.kept[s]}, {"discarded", summary.discarded[s]}};
  write_json(dir / "index.json",
             {{"clusters", entries}, {"per_species", per_species}, {"discarded", bank.discarded}},
             2);
}

ClusterBank read_cluster_bank(const fs::path& dir) {
  const json index = read_json(dir / "index.json");
  ClusterBank bank;
  try {
    bank.discarded = index.value("discarded", std::size_t{0});
    for (const json& e : index.at("clusters")) {
      const fs::path png = dir / e.at("file").get<std::string>();
      fs::path sidecar = png;
      sidecar.replace_extension(".json");
      const json meta = read_json(sidecar);
      ColonyCluster c;
      c.fragment = read_png_rgba(png);
      c.species = meta.at("species").get<int>();
      if (c.species < 1 || c.species > kSpeciesCount)
        throw ValidationError(sidecar.string() + ": species out of range");
      for (const json& b : meta.at("member_boxes"))
        c.member_boxes.push_back({b.at(0).get<double>(), b.at(1).get<double>(),
                                  b.at(2).get<double>(), b.at(3).get<double>()});
      for (const json& m : meta.at("instance_masks")) {
        c.instance_masks.push_back(rle_decode(rle_from_json(m)));
        if (!c.instance_masks.back().same_shape(c.fragment.alpha))
          throw ValidationError(sidecar.string() + ": instance mask size mismatch");
      }
      if (c.instance_masks.empty() || c.instance_masks.size() != c.member_boxes.size())
        throw ValidationError(sidecar.string() + ": inconsistent members");
      bank.clusters.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw ValidationError((dir / "index.json").string() + ": " + e.what());
  }
  return bank;
}

json region_to_json(const UsableRegion& r) {
  if (r.shape == UsableRegion::Shape::Circle)
    return {{"shape", "circle"}, {"cx", r.cx}, {"cy", r.cy}, {"r", r.r}};
  return {{"shape", "rect"}, {"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EmptyDish> read_dish_bank(const fs::path& dir) {
  std::vector<EmptyDish> dishes;
  for (const fs::path& png : list_pngs(dir)) {
    EmptyDish d;
    d.id = png.stem().string();
    d.image = read_png_rgb(png);
    d.region = UsableRegion::whole(d.image);
    fs::path sidecar = png;
    sidecar.replace_extension(".json");
    if (fs::exists(sidecar)) {
      const json meta = read_json(sidecar);
      try {
        const json& r = meta.at("region");
        if (r.at("shape") == "circle") {
          d.region.shape = UsableRegion::Shape::Circle;
          d.region.cx = r.at("cx").get<double>();
          d.region.cy = r.at("cy").get<double>();
          d.region.r = r.at("r").get<double>();
        } else if (r.at("shape") == "rect") {
          d.region = {UsableRegion::Shape::Rect, r.at("x").get<double>(), r.at("y").get<double>(),
                      r.at("w").get<double>(), r.at("h").get<double>()};
        } else {
          throw ValidationError(sidecar.string() + ": unknown region shape");
        }
      } catch (const json::exception& e) {
        throw ValidationError(sidecar.string() + ": " + e.what());
      }
    }
    dishes.push_back(std::move(d));
  }
  if (dishes.empty()) throw IoError("no dish images in " + dir.string());
  return dishes;
}

}  // namespace agarsynth
