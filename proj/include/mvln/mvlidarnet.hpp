// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvln/blob.hpp"
#include "mvln/network.hpp"
#include "mvln/pointcloud_io.hpp"
#include "mvln/postprocess.hpp"
#include "mvln/projection.hpp"

namespace mvln {

/// Perspective segmentation network. Input (3, rows, cols), output (7, rows, cols) logits.
/// rows and cols must be multiples of 8.
GraphSpec stage1_spec(int rows = 64, int cols = 2048);

/// Top-down detection network. Inputs (7, n, n) semantics and (3, n, n) height;
/// outputs (3, n/4, n/4) class logits and (6, n/4, n/4) box parameters. n must be a multiple of 16.
GraphSpec stage2_spec(int cells = 1024);

struct Stage1Graph {
  Network net;
};

struct Stage2Graph {
  Network net;
};

Stage1Graph build_stage1(const ParamStore& store, const RangeImageConfig& cfg = {});
Stage2Graph build_stage2(const ParamStore& store, const BevConfig& cfg = {});

/// Per-pixel class probabilities (7, rows, cols).
Tensor infer_stage1(const Stage1Graph& g, const RangeImage& img);
/// Softmaxed class grid and raw box regression grid.
DetectionGrids infer_stage2(const Stage2Graph& g, const BevGrid& bev);

struct PipelineConfig {
  RangeImageConfig range;
  BevConfig bev;
  ClusterConfig cluster;
  KnnConfig knn;
  bool knn_enabled = false;
  double drivable_threshold = 0.5;
  std::filesystem::path weights1;
  std::filesystem::path weights2;
  std::filesystem::path class_map;

  void validate() const;
  /// Keys: fov_up_deg, fov_down_deg, range_rows, range_cols, bev_cells, bev_extent,
  /// bev_out_stride, drivable_threshold, dbscan_eps, dbscan_min_pts, threshold,
  /// threshold.vehicle, threshold.pedestrian, knn, knn_k, knn_window, knn_cutoff,
  /// weights1, weights2, class_map. Relative paths resolve against `base_dir`.
  static PipelineConfig parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);
};

/// Cells of the BEV grid whose mean road probability exceeds `threshold`.
std::vector<std::uint8_t> drivable_mask(const Tensor& semantic, double threshold);

struct StageTimings {
  double spherical_projection_ms = 0.0;
  double stage1_ms = 0.0;
  double unproject_ms = 0.0;
  double bev_ms = 0.0;  // rasterization + semantic reprojection
  double stage2_ms = 0.0;
  double postprocess_ms = 0.0;
  double total_ms = 0.0;
};

struct PipelineOutput {
  RangeImage range_image;
  Tensor seg_probs;
  PointLabels point_labels;  // seg7, kNN-smoothed when enabled
  BevGrid bev;
  std::vector<std::uint8_t> drivable_mask;
  DetectionGrids grids;
  PostprocessResult post;
  std::vector<OrientedBox> detections;
};

/// Output-grid cells that hold at least one LiDAR return gate the detection tail.
PipelineOutput run_pipeline(const PointCloud& cloud, const Stage1Graph& stage1, const Stage2Graph& stage2,
                            const PipelineConfig& cfg, StageTimings* timings = nullptr);

/// Stage-1 only: probabilities and (optionally smoothed) point labels.
struct SegmentationOutput {
  RangeImage range_image;
  Tensor seg_probs;
  PointLabels point_labels;
  PointLabels smoothed_labels;  // empty unless kNN is enabled
};

SegmentationOutput run_segmentation(const PointCloud& cloud, const Stage1Graph& stage1, const PipelineConfig& cfg);

}  // namespace mvln
