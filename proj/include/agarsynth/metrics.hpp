#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "agarsynth/geometry.hpp"

namespace agarsynth {

struct Detection {
  int image_id = 0;
  int category_id = 0;
  BBox box;
  double score = 0.0;
};

struct GroundTruth {
  int image_id = 0;
  int category_id = 0;
  BBox box;
};

double iou(const BBox& a, const BBox& b);

// IoU thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

// Single-class AP with greedy best-IoU matching per image and 101-point
// interpolation. Detections of equal score keep their input order.
// nullopt when there is no ground truth.
std::optional<double> average_precision(std::span<const Detection> dets,
                                        std::span<const GroundTruth> gts, double iou_thresh);

struct MapResult {
  double map = 0.0;
  std::vector<double> thresholds;
  std::map<int, std::vector<double>> ap;  // category -> AP per threshold
};

// Mean AP over the thresholds and every category that has ground truth.
MapResult map_coco(std::span<const Detection> dets, std::span<const GroundTruth> gts);

struct CountPair {
  int image_id = 0;
  long truth = 0;
  long predicted = 0;
};

struct CountingMetrics {
  double mae = 0.0;
  double smape = 0.0;  // percent
};

CountingMetrics counting_metrics(std::span<const CountPair> pairs);

// Detections with score >= threshold, optionally restricted to one category.
long count_from_detections(std::span<const Detection> dets, double score_thresh,
                           std::optional<int> category = std::nullopt);

// CSV: one row per image, then MAE and sMAPE summary rows.
std::string counting_report(std::span<const CountPair> pairs);

struct MetricsReport {
  MapResult detection;
  CountingMetrics counting;
  std::vector<CountPair> pairs;
};

// image_ids lists every evaluated image; counts use score >= score_thresh.
MetricsReport evaluate(std::span<const int> image_ids, std::span<const Detection> dets,
                       std::span<const GroundTruth> gts, double score_thresh);

}  // namespace agarsynth
