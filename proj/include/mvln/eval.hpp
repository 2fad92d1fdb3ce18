// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mvln/pointcloud_io.hpp"
#include "mvln/postprocess.hpp"

namespace mvln {

/// Corners of a BEV rectangle, counter-clockwise.
std::array<Vec2, 4> box_corners(const OrientedBox& box);

/// Area of a simple polygon (shoelace, absolute value).
double polygon_area(std::span<const Vec2> poly);

/// Intersection of two convex polygons given counter-clockwise (Sutherland-Hodgman).
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

/// Intersection-over-union of two oriented BEV rectangles.
double rotated_iou(const OrientedBox& a, const OrientedBox& b);

enum class ApInterpolation { k40Point = 40, k11Point = 11 };

struct EvalConfig {
  std::array<double, 2> iou_threshold = {0.7, 0.5};  // vehicle, pedestrian
  std::vector<std::pair<double, double>> range_buckets = {{0.0, 10.0}, {10.0, 25.0}, {25.0, 50.0}};
  ApInterpolation interpolation = ApInterpolation::k40Point;

  double threshold_for(Det3 cls) const { return iou_threshold.at(static_cast<std::size_t>(cls)); }
  void validate() const;
};

/// Detections and ground truth of one frame.
struct FrameBoxes {
  std::vector<OrientedBox> detections;
  std::vector<OrientedBox> ground_truth;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct ApResult {
  std::optional<double> ap;  // absent when the class has no ground truth
  std::vector<PrPoint> curve;
  std::size_t num_gt = 0;
  std::size_t num_detections = 0;
  std::size_t true_positives = 0;
};

/// Interpolated AP from a PR curve: mean over recall points of the best precision
/// at recall >= r. 40-point uses r in {1/40..1}; 11-point uses {0, 0.1, ..., 1}.
double interpolated_ap(std::span<const PrPoint> curve, ApInterpolation interpolation);

/// Greedy confidence-ordered matching across frames for one class.
ApResult match_and_ap(std::span<const FrameBoxes> frames, Det3 cls, double iou_threshold,
                      ApInterpolation interpolation = ApInterpolation::k40Point);

/// BEV centroid distance from the ego origin.
double box_range(const OrientedBox& box);

/// AP per range bucket [lo, hi). Boxes outside every bucket are ignored.
std::vector<std::optional<double>> range_bucketed_ap(std::span<const FrameBoxes> frames, Det3 cls,
                                                     const EvalConfig& cfg);

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes = kNumSeg7)
      : classes_(classes), counts_(static_cast<std::size_t>(classes) * classes, 0) {}

  /// Rows are ground truth, columns predictions.
  void add(const PointLabels& pred, const PointLabels& gt);
  std::uint64_t at(int gt, int pred) const { return counts_[static_cast<std::size_t>(gt) * classes_ + pred]; }
  int classes() const noexcept { return classes_; }
  std::uint64_t total() const;

 private:
  int classes_;
  std::vector<std::uint64_t> counts_;
};

struct SegmentationReport {
  ConfusionMatrix confusion;
  std::vector<std::optional<double>> iou;  // absent when the class never occurs
  std::optional<double> mean_iou;          // mean over classes present in ground truth
};

SegmentationReport segmentation_report(const ConfusionMatrix& cm);
SegmentationReport segmentation_iou(const PointLabels& pred, const PointLabels& gt, int classes = kNumSeg7);

}  // namespace mvln
