// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mvln/pointcloud_io.hpp"
#include "mvln/projection.hpp"
#include "mvln/tensor.hpp"

namespace mvln {

inline constexpr int kNumBoxParams = 6;

/// Per-cell regression target: offset to the object centroid, size and heading.
struct BoxParams {
  double dx = 0.0;
  double dy = 0.0;
  double width = 0.0;
  double length = 0.0;
  double sin_yaw = 0.0;
  double cos_yaw = 1.0;
};

struct OrientedBox {
  double cx = 0.0;
  double cy = 0.0;
  double width = 0.0;
  double length = 0.0;  // along the heading
  double yaw = 0.0;     // (-pi, pi]
  Det3 cls = Det3::kVehicle;
  double confidence = 1.0;
};

/// Maps any angle into (-pi, pi].
double normalize_yaw(double yaw);

struct ClusterConfig {
  double eps = 0.8;
  int min_pts = 3;
  double confidence_threshold = 0.5;
  std::array<std::optional<double>, 2> class_threshold{};  // vehicle, pedestrian overrides

  double threshold_for(Det3 cls) const;
  void validate() const;
};

struct CellHit {
  int row = 0;  // output-grid index along +x
  int col = 0;  // output-grid index along +y
  Det3 cls = Det3::kVehicle;
  double confidence = 0.0;
};

/// Cells whose best non-unknown class probability strictly exceeds its threshold.
/// A non-empty `eligible` mask (rows * cols) restricts the scan to flagged cells.
std::vector<CellHit> threshold_cells(const Tensor& class_grid, const ClusterConfig& cfg,
                                     std::span<const std::uint8_t> eligible = {});

/// Metric centre of an output cell, ego frame.
std::array<double, 2> cell_center(int row, int col, const BevConfig& cfg);

BoxParams box_params_at(const Tensor& box_grid, int row, int col);
void set_box_params(Tensor& box_grid, int row, int col, const BoxParams& p);

/// Throws kDegenerateBox when the regressed size is not positive.
OrientedBox decode_cell(int row, int col, const BoxParams& params, const BevConfig& cfg,
                        Det3 cls = Det3::kVehicle, double confidence = 1.0);
BoxParams encode_box(const OrientedBox& box, int row, int col, const BevConfig& cfg);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline constexpr int kNoise = -1;

/// DBSCAN with Euclidean distance (neighbourhoods include the point itself and
/// use dist <= eps). Clusters are numbered in creation order while scanning
/// points by index; border points join the first cluster that reaches them.
std::vector<int> dbscan(std::span<const Vec2> points, double eps, int min_pts);

/// Mean centroid, size and confidence; circular mean heading.
OrientedBox aggregate_cluster(std::span<const OrientedBox> members);

struct PostprocessResult {
  std::vector<CellHit> hits;
  std::vector<OrientedBox> cell_boxes;  // decoded hits, degenerate cells removed
  std::vector<int> cluster_of;          // per cell box; index into detections or kNoise
  std::vector<OrientedBox> detections;
  std::size_t degenerate_cells = 0;
};

/// threshold -> decode -> per-class DBSCAN on centroids -> per-cluster averaging.
PostprocessResult postprocess(const Tensor& class_grid, const Tensor& box_grid, const BevConfig& bev,
                              const ClusterConfig& cfg, std::span<const std::uint8_t> eligible = {});

/// Output cells whose stride x stride input footprint holds at least one point.
std::vector<std::uint8_t> output_occupancy(std::span<const std::uint8_t> input_occupancy, const BevConfig& cfg);

struct DetectionGrids {
  Tensor class_grid;  // (3, out, out) probabilities
  Tensor box_grid;    // (6, out, out)
};

/// Paints each box into the grids: every output cell whose centre lies inside the
/// box footprint gets class probability `confidence` and the box's regression target.
DetectionGrids encode_grids(std::span<const OrientedBox> boxes, const BevConfig& cfg);

}  // namespace mvln
