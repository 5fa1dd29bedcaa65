#include "agarsynth/pipeline.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <fstream>
#include <map>
#include <set>

#include "agarsynth/cluster_graph.hpp"
#include "agarsynth/rng.hpp"

namespace agarsynth {

namespace {

int majority_species(std::span<const int> cats, std::span<const std::size_t> members) {
  std::map<int, int> votes;
  for (std::size_t m : members) ++votes[cats[m]];
  int best = 0, best_votes = 0;
  for (const auto& [c, v] : votes)
    if (v > best_votes) best = c, best_votes = v;
  return best;
}

struct ClusterJob {
  std::size_t image;
  std::size_t cluster;
  std::vector<BBox> boxes;
  int species;
};

}  // namespace

ExtractSummary extract_bank(const fs::path& images_dir, const fs::path& annotations,
                            const fs::path& out_dir, double cluster_threshold,
                            const SegmentationParams& params, std::uint64_t seed, int workers) {
  const std::vector<AnnotatedImage> images = read_coco_boxes(read_json(annotations));
  if (images.empty()) throw ValidationError(annotations.string() + ": no images");
  std::vector<std::string> bad;
  for (const AnnotatedImage& img : images)
    for (int c : img.categories)
      if (c < 1 || c > kSpeciesCount)
        bad.push_back(fmt::format("image {} has category {}", img.id, c));
  if (!bad.empty()) {
    std::string msg = fmt::format("{}: category ids must be 1..{}:", annotations.string(), kSpeciesCount);
    for (const auto& b : bad) msg += "\n  " + b;
    throw ValidationError(msg);
  }

  std::vector<ImageRGB> pixels;
  std::vector<ClusterJob> jobs;
  for (std::size_t i = 0; i < images.size(); ++i) {
    pixels.push_back(read_png_rgb(images_dir / images[i].file_name));
    const auto& boxes = images[i].boxes;
    const ClusterPartition parts = connected_components(build_adjacency(boxes, cluster_threshold));
    for (std::size_t k = 0; k < parts.size(); ++k) {
      ClusterJob job{i, k, {}, majority_species(images[i].categories, parts[k])};
      for (std::size_t m : parts[k]) job.boxes.push_back(boxes[m]);
      jobs.push_back(std::move(job));
    }
  }

  const int n = static_cast<int>(jobs.size());
  std::vector<std::optional<ColonyCluster>> results(n);
  std::vector<std::string> errors(n);
  omp_set_max_active_levels(1);
#pragma omp parallel for num_threads(std::max(workers, 1)) schedule(dynamic, 1)
  for (int j = 0; j < n; ++j) {
    const ClusterJob& job = jobs[j];
    Rng rng(derive_seed(seed, {job.image, job.cluster}));
    try {
      results[j] = extract_cluster(pixels[job.image], job.boxes, job.species, params, rng);
      if (!results[j]) errors[j] = "segmentation found no colony";
    } catch (const SegmentationError& e) {
      errors[j] = e.what();
    }
  }

  ExtractSummary summary;
  summary.images = images.size();
  summary.clusters = jobs.size();
  ClusterBank bank;
  for (int j = 0; j < n; ++j) {
    const int s = jobs[j].species - 1;
    if (results[j]) {
      bank.clusters.push_back(std::move(*results[j]));
      ++summary.bank.kept[s];
    } else {
      ++summary.bank.discarded[s];
      ++bank.discarded;
      summary.warnings.push_back(fmt::format("{} cluster {}: {}", images[jobs[j].image].file_name,
                                             jobs[j].cluster, errors[j]));
    }
  }
  write_cluster_bank(out_dir, bank, summary.bank);
  return summary;
}

std::vector<Detection> read_predictions(const json& doc) {
  if (!doc.is_array()) throw ValidationError("predictions must be a JSON array");
  std::vector<Detection> out;
  std::vector<std::string> errors;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      const json& p = doc[i];
      const json& b = p.at("bbox");
      if (!b.is_array() || b.size() != 4) throw ValidationError("bbox must have 4 numbers");
      Detection d{p.at("image_id").get<int>(), p.at("category_id").get<int>(),
                  {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()},
                  p.at("score").get<double>()};
      out.push_back(d);
    } catch (const std::exception& e) {
      errors.push_back(fmt::format("prediction {}: {}", i, e.what()));
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid predictions:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  return out;
}

MetricsReport evaluate_files(const fs::path& ground_truth, const fs::path& predictions,
                             double score_thresh, const fs::path& out_dir) {
  const json gt_doc = read_json(ground_truth);
  const std::vector<AnnotatedImage> images = read_coco_boxes(gt_doc);
  const std::vector<Detection> dets = read_predictions(read_json(predictions));

  std::set<int> image_ids, cat_ids;
  std::vector<int> ids;
  std::vector<GroundTruth> gts;
  for (const AnnotatedImage& img : images) {
    image_ids.insert(img.id);
    ids.push_back(img.id);
    for (std::size_t k = 0; k < img.boxes.size(); ++k) {
      gts.push_back({img.id, img.categories[k], img.boxes[k]});
      cat_ids.insert(img.categories[k]);
    }
  }
  if (gt_doc.contains("categories"))
    for (const json& c : gt_doc["categories"]) cat_ids.insert(c.at("id").get<int>());

  std::set<int> bad_images, bad_cats;
  for (const Detection& d : dets) {
    if (!image_ids.count(d.image_id)) bad_images.insert(d.image_id);
    if (!cat_ids.count(d.category_id)) bad_cats.insert(d.category_id);
  }
  if (!bad_images.empty() || !bad_cats.empty()) {
    std::string msg = "predictions do not match the ground truth:";
    for (int id : bad_images) msg += fmt::format("\n  unknown image_id {}", id);
    for (int id : bad_cats) msg += fmt::format("\n  unknown category_id {}", id);
    throw ValidationError(msg);
  }
  if (gts.empty()) throw ValidationError(ground_truth.string() + ": no ground-truth boxes");

  const MetricsReport r = evaluate(ids, dets, gts, score_thresh);
  json per_class = json::object();
  for (const auto& [c, aps] : r.detection.ap) {
    double mean = 0;
    for (double a : aps) mean += a;
    per_class[std::to_string(c)] = {{"ap", mean / aps.size()}, {"ap_per_threshold", aps}};
  }
  const json metrics = {{"map", r.detection.map},
                        {"iou_thresholds", r.detection.thresholds},
                        {"per_class", per_class},
                        {"mae", r.counting.mae},
                        {"smape", r.counting.smape},
                        {"score_threshold", score_thresh},
                        {"images", ids.size()},
                        {"detections", dets.size()},
                        {"ground_truths", gts.size()}};
  fs::create_directories(out_dir);
  write_json(out_dir / "metrics.json", metrics, 2);
  std::ofstream csv(out_dir / "counts.csv", std::ios::binary);
  csv << counting_report(r.pairs);
  if (!csv) throw IoError("cannot write " + (out_dir / "counts.csv").string());
  return r;
}

Rgb species_color(int category_id) {
  static constexpr std::array<Rgb, kSpeciesCount> colors = {
      Rgb{1.0, 0.2, 0.2}, Rgb{0.2, 0.9, 0.2}, Rgb{0.2, 0.4, 1.0}, Rgb{1.0, 0.9, 0.1},
      Rgb{0.9, 0.2, 0.9}};
  if (category_id < 1 || category_id > kSpeciesCount) return {1, 1, 1};
  return colors[category_id - 1];
}

std::vector<fs::path> render_previews(const fs::path& dataset_dir, int n, const fs::path& out_dir) {
  std::vector<fs::path> written;
  if (n <= 0) return written;
  const json doc = read_json(dataset_dir / "annotations.json");
  const std::vector<AnnotatedImage> images = read_coco_boxes(doc);
  std::map<int, std::vector<const json*>> anns;
  for (const json& a : doc.at("annotations")) anns[a.at("image_id").get<int>()].push_back(&a);

  const std::size_t count = std::min<std::size_t>(n, images.size());
  for (std::size_t first = 0; first < count; first += kSheetPatches) {
    const std::size_t k = std::min<std::size_t>(kSheetPatches, count - first);
    int cell_w = 0, cell_h = 0;
    for (std::size_t i = first; i < first + k; ++i)
      cell_w = std::max(cell_w, images[i].width), cell_h = std::max(cell_h, images[i].height);
    const int cols = std::min<int>(kSheetColumns, k);
    const int rows = static_cast<int>((k + kSheetColumns - 1) / kSheetColumns);
    ImageRGB sheet(cols * cell_w + (cols + 1) * kSheetGap, rows * cell_h + (rows + 1) * kSheetGap,
                   Rgb{0.1, 0.1, 0.1});
    for (std::size_t i = first; i < first + k; ++i) {
      const int slot = static_cast<int>(i - first);
      const int ox = kSheetGap + (slot % kSheetColumns) * (cell_w + kSheetGap);
      const int oy = kSheetGap + (slot / kSheetColumns) * (cell_h + kSheetGap);
      ImageRGB img = read_png_rgb(dataset_dir / "images" / images[i].file_name);
      for (const json* a : anns[images[i].id]) {
        const Rgb col = species_color(a->at("category_id").get<int>());
        if (a->contains("segmentation")) {
          const Mask m = rle_decode(rle_from_json(a->at("segmentation")));
          if (m.same_shape(img))
            for (std::size_t p = 0; p < m.size(); ++p)
              if (m[p] > 0.5) {
                Rgb& px = img[p];
                px = {0.65 * px.r + 0.35 * col.r, 0.65 * px.g + 0.35 * col.g,
                      0.65 * px.b + 0.35 * col.b};
              }
        }
      }
      for (const json* a : anns[images[i].id]) {
        const Rgb col = species_color(a->at("category_id").get<int>());
        const json& b = a->at("bbox");
        const int bx = b[0].get<int>(), by = b[1].get<int>();
        const int bw = b[2].get<int>(), bh = b[3].get<int>();
        auto put = [&](int x, int y) {
          if (img.contains(x, y)) img.at(x, y) = col;
        };
        for (int x = bx; x < bx + bw; ++x) put(x, by), put(x, by + bh - 1);
        for (int y = by; y < by + bh; ++y) put(bx, y), put(bx + bw - 1, y);
      }
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) sheet.at(ox + x, oy + y) = img.at(x, y);
    }
    fs::create_directories(out_dir);
    const fs::path path = out_dir / fmt::format("preview_{:03}.png", first / kSheetPatches);
    write_png(path, sheet);
    written.push_back(path);
  }
  return written;
}

}  // namespace agarsynth
