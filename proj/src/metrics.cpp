#include "agarsynth/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace agarsynth {

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

std::optional<double> average_precision(std::span<const Detection> dets,
                                        std::span<const GroundTruth> gts, double iou_thresh) {
  if (gts.empty()) return std::nullopt;

  // Greedy matching per image, highest score first.
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<char> gt_used(gts.size(), 0), tp(dets.size(), 0);
  for (std::size_t d : order) {
    double best = iou_thresh;
    std::size_t match = SIZE_MAX;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g] || gts[g].image_id != dets[d].image_id) continue;
      const double v = iou(dets[d].box, gts[g].box);
      if (v >= best) {
        best = v;
        match = g;
      }
    }
    if (match != SIZE_MAX) {
      gt_used[match] = 1;
      tp[d] = 1;
    }
  }

  const double npos = gts.size();
  std::vector<double> recall, precision;
  double ntp = 0, nfp = 0;
  for (std::size_t d : order) {
    (tp[d] ? ntp : nfp) += 1;
    recall.push_back(ntp / npos);
    precision.push_back(ntp / (ntp + nfp));
  }
  for (std::size_t i = precision.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);

  double sum = 0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[it - recall.begin()];
  }
  return sum / 101.0;
}

MapResult map_coco(std::span<const Detection> dets, std::span<const GroundTruth> gts) {
  if (gts.empty()) throw std::invalid_argument("mAP needs at least one ground-truth box");
  MapResult res;
  res.thresholds = coco_iou_thresholds();
  std::set<int> cats;
  for (const GroundTruth& g : gts) cats.insert(g.category_id);
  double sum = 0;
  std::size_t n = 0;
  for (int c : cats) {
    std::vector<Detection> cd;
    std::vector<GroundTruth> cg;
    for (const Detection& d : dets)
      if (d.category_id == c) cd.push_back(d);
    for (const GroundTruth& g : gts)
      if (g.category_id == c) cg.push_back(g);
    auto& row = res.ap[c];
    for (double t : res.thresholds) {
      row.push_back(*average_precision(cd, cg, t));
      sum += row.back();
      ++n;
    }
  }
  res.map = sum / n;
  return res;
}

CountingMetrics counting_metrics(std::span<const CountPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("counting metrics need at least one image");
  double abs_sum = 0, pct_sum = 0;
  for (const CountPair& p : pairs) {
    const double diff = std::abs(double(p.predicted - p.truth));
    abs_sum += diff;
    const double denom = (p.predicted + p.truth) / 2.0;
    if (denom > 0) pct_sum += diff / denom;
  }
  return {abs_sum / pairs.size(), 100.0 * pct_sum / pairs.size()};
}

long count_from_detections(std::span<const Detection> dets, double score_thresh,
                           std::optional<int> category) {
  return std::count_if(dets.begin(), dets.end(), [&](const Detection& d) {
    return d.score >= score_thresh && (!category || d.category_id == *category);
  });
}

std::string counting_report(std::span<const CountPair> pairs) {
  const CountingMetrics m = counting_metrics(pairs);
  std::string out = "image_id,true_count,predicted_count\n";
  for (const CountPair& p : pairs) out += fmt::format("{},{},{}\n", p.image_id, p.truth, p.predicted);
  out += fmt::format("MAE,{:.6f},\n", m.mae);
  out += fmt::format("sMAPE,{:.6f},\n", m.smape);
  return out;
}

MetricsReport evaluate(std::span<const int> image_ids, std::span<const Detection> dets,
                       std::span<const GroundTruth> gts, double score_thresh) {
  MetricsReport r;
  r.detection = map_coco(dets, gts);
  for (int id : image_ids) {
    CountPair p{id, 0, 0};
    for (const GroundTruth& g : gts) p.truth += g.image_id == id;
    for (const Detection& d : dets) p.predicted += d.image_id == id && d.score >= score_thresh;
    r.pairs.push_back(p);
  }
  r.counting = counting_metrics(r.pairs);
  return r;
}

}  // namespace agarsynth
