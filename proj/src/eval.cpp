// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvln/error.hpp"

namespace mvln {
namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

Vec2 line_intersection(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double a1 = p2.y - p1.y;
  const double b1 = p1.x - p2.x;
  const double c1 = a1 * p1.x + b1 * p1.y;
  const double a2 = q2.y - q1.y;
  const double b2 = q1.x - q2.x;
  const double c2 = a2 * q1.x + b2 * q1.y;
  const double det = a1 * b2 - a2 * b1;
  if (det == 0.0) return p2;
  return {(b2 * c1 - b1 * c2) / det, (a1 * c2 - a2 * c1) / det};
}

}  // namespace

std::array<Vec2, 4> box_corners(const OrientedBox& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = box.length / 2.0;
  const double hw = box.width / 2.0;
  auto at = [&](double u, double v) { return Vec2{box.cx + u * c - v * s, box.cy + u * s + v * c}; };
  return {at(hl, hw), at(-hl, hw), at(-hl, -hw), at(hl, -hw)};
}

double polygon_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return std::abs(a) / 2.0;
}

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    std::vector<Vec2> input;
    input.swap(out);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2& cur = input[i];
      const Vec2& prev = input[(i + input.size() - 1) % input.size()];
      const bool cur_in = cross(a, b, cur) >= 0.0;
      const bool prev_in = cross(a, b, prev) >= 0.0;
      if (cur_in) {
        if (!prev_in) out.push_back(line_intersection(prev, cur, a, b));
        out.push_back(cur);
      } else if (prev_in) {
        out.push_back(line_intersection(prev, cur, a, b));
      }
    }
  }
  return out;
}

double rotated_iou(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = box_corners(a);
  const auto cb = box_corners(b);
  const double area_a = a.width * a.length;
  const double area_b = b.width * b.length;
  const auto inter_poly = clip_convex(ca, cb);
  const double inter = inter_poly.size() < 3 ? 0.0 : polygon_area(inter_poly);
  const double uni = area_a + area_b - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

void EvalConfig::validate() const {
  for (double t : iou_threshold) {
    if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "IoU threshold outside (0,1]");
  }
  for (std::size_t i = 0; i < range_buckets.size(); ++i) {
    const auto [lo, hi] = range_buckets[i];
    if (!(lo >= 0.0 && lo < hi)) throw Error(ErrorCode::kInvalidConfig, "range bucket bounds invalid");
    if (i > 0 && lo < range_buckets[i - 1].second) {
      throw Error(ErrorCode::kInvalidConfig, "range buckets must be disjoint and ascending");
    }
  }
}

double interpolated_ap(std::span<const PrPoint> curve, ApInterpolation interpolation) {
  const int n = static_cast<int>(interpolation);
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double r = interpolation == ApInterpolation::k40Point ? static_cast<double>(k + 1) / 40.0
                                                                 : static_cast<double>(k) / 10.0;
    double best = 0.0;
    for (const auto& p : curve) {
      // Tolerance guards recall values such as 3/3 vs 40/40 computed along different paths.
      if (p.recall >= r - 1e-12) best = std::max(best, p.precision);
    }
    sum += best;
  }
  return sum / n;
}

ApResult match_and_ap(std::span<const FrameBoxes> frames, Det3 cls, double iou_threshold,
                      ApInterpolation interpolation) {
  struct Ranked {
    double confidence;
    std::size_t frame;
    std::size_t index;
  };
  ApResult result;
  std::vector<Ranked> ranked;
  std::vector<std::vector<std::size_t>> gts(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (std::size_t i = 0; i < frames[f].detections.size(); ++i) {
      if (frames[f].detections[i].cls == cls) ranked.push_back({frames[f].detections[i].confidence, f, i});
    }
    for (std::size_t g = 0; g < frames[f].ground_truth.size(); ++g) {
      if (frames[f].ground_truth[g].cls == cls) gts[f].push_back(g);
    }
    result.num_gt += gts[f].size();
  }
  result.num_detections = ranked.size();
  // Stable order: confidence descending, then frame, then index.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.confidence > b.confidence; });

  std::vector<std::vector<std::uint8_t>> used(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) used[f].assign(gts[f].size(), 0);

  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    const auto& d = frames[ranked[k].frame].detections[ranked[k].index];
    const auto& frame_gts = gts[ranked[k].frame];
    double best_iou = -1.0;
    std::size_t best = frame_gts.size();
    for (std::size_t g = 0; g < frame_gts.size(); ++g) {
      if (used[ranked[k].frame][g]) continue;
      const double iou = rotated_iou(d, frames[ranked[k].frame].ground_truth[frame_gts[g]]);
      if (iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best < frame_gts.size() && best_iou >= iou_threshold) {
      used[ranked[k].frame][best] = 1;
      ++tp;
    }
    if (result.num_gt > 0) {
      result.curve.push_back({static_cast<double>(tp) / static_cast<double>(result.num_gt),
                              static_cast<double>(tp) / static_cast<double>(k + 1)});
    }
  }
  result.true_positives = tp;
  if (result.num_gt > 0) result.ap = interpolated_ap(result.curve, interpolation);
  return result;
}

double box_range(const OrientedBox& box) { return std::hypot(box.cx, box.cy); }

std::vector<std::optional<double>> range_bucketed_ap(std::span<const FrameBoxes> frames, Det3 cls,
                                                     const EvalConfig& cfg) {
  cfg.validate();
  std::vector<std::optional<double>> out;
  for (const auto& [lo, hi] : cfg.range_buckets) {
    auto inside = [lo = lo, hi = hi](const OrientedBox& b) {
      const double r = box_range(b);
      return r >= lo && r < hi;
    };
    std::vector<FrameBoxes> restricted(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
      std::copy_if(frames[f].detections.begin(), frames[f].detections.end(),
                   std::back_inserter(restricted[f].detections), inside);
      std::copy_if(frames[f].ground_truth.begin(), frames[f].ground_truth.end(),
                   std::back_inserter(restricted[f].ground_truth), inside);
    }
    out.push_back(match_and_ap(restricted, cls, cfg.threshold_for(cls), cfg.interpolation).ap);
  }
  return out;
}

void ConfusionMatrix::add(const PointLabels& pred, const PointLabels& gt) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(pred.size()) + " predictions vs " +
                                                std::to_string(gt.size()) + " ground-truth labels");
  }
  if (pred.taxonomy != gt.taxonomy) throw Error(ErrorCode::kLengthMismatch, "label taxonomies differ");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int g = gt.labels[i];
    const int p = pred.labels[i];
    if (g >= classes_ || p >= classes_) {
      throw Error(ErrorCode::kMalformedFile, "label out of range at point " + std::to_string(i));
    }
    ++counts_[static_cast<std::size_t>(g) * classes_ + p];
  }
}

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

SegmentationReport segmentation_report(const ConfusionMatrix& cm) {
  SegmentationReport r{cm, {}, std::nullopt};
  const int k = cm.classes();
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < k; ++c) {
    std::uint64_t tp = cm.at(c, c);
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    for (int o = 0; o < k; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    const std::uint64_t denom = tp + fp + fn;
    if (denom == 0) {
      r.iou.push_back(std::nullopt);
      continue;
    }
    const double iou = static_cast<double>(tp) / static_cast<double>(denom);
    r.iou.push_back(iou);
    if (tp + fn > 0) {
      sum += iou;
      ++present;
    }
  }
  if (present > 0) r.mean_iou = sum / present;
  return r;
}

SegmentationReport segmentation_iou(const PointLabels& pred, const PointLabels& gt, int classes) {
  ConfusionMatrix cm(classes);
  cm.add(pred, gt);
  return segmentation_report(cm);
}

}  // namespace mvln
