// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/mvlidarnet.hpp"

#include <chrono>

#include "mvln/config.hpp"
#include "mvln/error.hpp"
#include "mvln/nn.hpp"

namespace mvln {
namespace {

LayerSpec conv(std::string name, std::string input, int filters, int kernel, int stride = 1, bool bn_relu = true) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::kConv;
  l.inputs = {std::move(input)};
  l.filters = filters;
  l.kernel = kernel;
  l.stride = stride;
  l.bn_relu = bn_relu;
  return l;
}

LayerSpec deconv(std::string name, std::string input, int filters) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::kDeconv;
  l.inputs = {std::move(input)};
  l.filters = filters;
  l.kernel = 2;
  l.stride = 2;
  return l;
}

LayerSpec inception(std::string name, std::string input, int filters, int modules, bool downsample) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::kInception;
  l.inputs = {std::move(input)};
  l.filters = filters;
  l.modules = modules;
  l.downsample = downsample;
  return l;
}

LayerSpec concat(std::string name, std::string first, std::string second) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::kConcat;
  l.inputs = {std::move(first), std::move(second)};
  return l;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

GraphSpec stage1_spec(int rows, int cols) {
  if (rows < 8 || cols < 8 || rows % 8 != 0 || cols % 8 != 0) {
    throw Error(ErrorCode::kInvalidConfig, "stage-1 input dims must be positive multiples of 8");
  }
  GraphSpec g;
  g.inputs = {{"input", Shape{3, rows, cols}}};
  g.layers = {
      conv("trunk1", "input", 64, 3),
      conv("trunk2", "trunk1", 64, 3),
      conv("trunk3", "trunk2", 128, 3, 2),
      inception("block1", "trunk3", 64, 2, false),
      inception("block2", "block1", 64, 2, true),
      inception("block3", "block2", 128, 3, true),
      deconv("up1a", "block3", 256),
      concat("up1b", "up1a", "block2"),
      conv("up1c", "up1b", 256, 1),
      conv("up1d", "up1c", 256, 3),
      deconv("up2a", "up1d", 128),
      concat("up2b", "up2a", "block1"),
      conv("up2c", "up2b", 128, 1),
      conv("up2d", "up2c", 128, 3),
      deconv("up3a", "up2d", 64),
      conv("up3b", "up3a", 64, 1),
      conv("up3c", "up3b", 64, 3),
      conv("classhead1", "up3c", 64, 3),
      conv("classhead2", "classhead1", kNumSeg7, 1, 1, false),
  };
  g.outputs = {"classhead2"};
  return g;
}

GraphSpec stage2_spec(int cells) {
  if (cells < 16 || cells % 16 != 0) {
    throw Error(ErrorCode::kInvalidConfig, "stage-2 input size must be a positive multiple of 16");
  }
  GraphSpec g;
  g.inputs = {{"semantics", Shape{kNumSeg7, cells, cells}}, {"height", Shape{3, cells, cells}}};
  g.layers = {
      conv("sem1", "semantics", 16, 3),
      conv("sem2", "sem1", 16, 3),
      conv("sem3", "sem2", 32, 3, 2),
      conv("sem4", "sem3", 32, 3),
      conv("height1", "height", 16, 3),
      conv("height2", "height1", 16, 3),
      conv("height3", "height2", 32, 3, 2),
      conv("height4", "height3", 32, 3),
      concat("block0", "sem4", "height4"),
      conv("block1a", "block0", 64, 3),
      conv("block1b", "block1a", 64, 3, 2),
      conv("block2a", "block1b", 128, 3),
      conv("block2b", "block2a", 128, 3, 2),
      conv("block3a", "block2b", 256, 3),
      conv("block3b", "block3a", 256, 3, 2),
      deconv("up1a", "block3b", 128),
      concat("up1b", "up1a", "block2b"),
      conv("up1c", "up1b", 128, 3),
      deconv("up2a", "up1c", 64),
      concat("up2b", "up2a", "block1b"),
      conv("up2c", "up2b", 64, 3),
      conv("classhead1", "up2c", 64, 3),
      conv("classhead2", "classhead1", 32, 3),
      conv("classhead3", "classhead2", kNumDet3, 3, 1, false),
      conv("bboxhead1", "up2c", 64, 3),
      conv("bboxhead2", "bboxhead1", 32, 3),
      conv("bboxhead3", "bboxhead2", kNumBoxParams, 3, 1, false),
  };
  g.outputs = {"classhead3", "bboxhead3"};
  return g;
}

Stage1Graph build_stage1(const ParamStore& store, const RangeImageConfig& cfg) {
  return {Network::build(stage1_spec(cfg.rows, cfg.cols), store)};
}

Stage2Graph build_stage2(const ParamStore& store, const BevConfig& cfg) {
  if (cfg.out_stride != 4) throw Error(ErrorCode::kInvalidConfig, "stage-2 graph downsamples by exactly 4");
  return {Network::build(stage2_spec(cfg.cells), store)};
}

Tensor infer_stage1(const Stage1Graph& g, const RangeImage& img) {
  auto out = g.net.run({img.channels});
  return nn::softmax_channels(out.front());
}

DetectionGrids infer_stage2(const Stage2Graph& g, const BevGrid& bev) {
  auto out = g.net.run({bev.semantic, bev.height});
  return {nn::softmax_channels(out[0]), std::move(out[1])};
}

void PipelineConfig::validate() const {
  range.validate();
  bev.validate();
  cluster.validate();
  knn.validate();
  if (range.rows % 8 != 0 || range.cols % 8 != 0) {
    throw Error(ErrorCode::kInvalidConfig, "range image dims must be multiples of 8");
  }
  if (bev.out_stride != 4 || bev.cells % 16 != 0) {
    throw Error(ErrorCode::kInvalidConfig, "BEV input must be a multiple of 16 cells with output stride 4");
  }
  if (!(drivable_threshold >= 0.0 && drivable_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "drivable threshold outside [0,1]");
  }
}

PipelineConfig PipelineConfig::parse(std::string_view text, const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "fov_up_deg") cfg.range.fov_up = deg2rad(parse_double(key, value));
    else if (key == "fov_down_deg") cfg.range.fov_down = deg2rad(parse_double(key, value));
    else if (key == "range_rows") cfg.range.rows = parse_int(key, value);
    else if (key == "range_cols") cfg.range.cols = parse_int(key, value);
    else if (key == "bev_cells") cfg.bev.cells = parse_int(key, value);
    else if (key == "bev_extent") cfg.bev.extent = parse_double(key, value);
    else if (key == "bev_out_stride") cfg.bev.out_stride = parse_int(key, value);
    else if (key == "drivable_threshold") cfg.drivable_threshold = parse_double(key, value);
    else if (key == "dbscan_eps") cfg.cluster.eps = parse_double(key, value);
    else if (key == "dbscan_min_pts") cfg.cluster.min_pts = parse_int(key, value);
    else if (key == "threshold") cfg.cluster.confidence_threshold = parse_double(key, value);
    else if (key == "threshold.vehicle") cfg.cluster.class_threshold[0] = parse_double(key, value);
    else if (key == "threshold.pedestrian") cfg.cluster.class_threshold[1] = parse_double(key, value);
    else if (key == "knn") cfg.knn_enabled = parse_bool(key, value);
    else if (key == "knn_k") cfg.knn.k = parse_int(key, value);
    else if (key == "knn_window") cfg.knn.window = parse_int(key, value);
    else if (key == "knn_cutoff") cfg.knn.cutoff = parse_double(key, value);
    else if (key == "weights1") cfg.weights1 = resolve(value);
    else if (key == "weights2") cfg.weights2 = resolve(value);
    else if (key == "class_map") cfg.class_map = resolve(value);
    else throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.parent_path());
}

std::vector<std::uint8_t> drivable_mask(const Tensor& semantic, double threshold) {
  const auto road = semantic.channel(static_cast<int>(Seg7::kRoad));
  std::vector<std::uint8_t> mask(road.size(), 0);
  for (std::size_t i = 0; i < road.size(); ++i) mask[i] = static_cast<double>(road[i]) > threshold ? 1 : 0;
  return mask;
}

SegmentationOutput run_segmentation(const PointCloud& cloud, const Stage1Graph& stage1, const PipelineConfig& cfg) {
  SegmentationOutput out;
  out.range_image = spherical_project(cloud, cfg.range);
  out.seg_probs = infer_stage1(stage1, out.range_image);
  out.point_labels = unproject_labels(out.seg_probs, out.range_image, cloud);
  if (cfg.knn_enabled) out.smoothed_labels = knn_smooth(out.point_labels, cloud, out.range_image, cfg.knn);
  return out;
}

PipelineOutput run_pipeline(const PointCloud& cloud, const Stage1Graph& stage1, const Stage2Graph& stage2,
                            const PipelineConfig& cfg, StageTimings* timings) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  StageTimings t;
  const auto t_start = clock::now();
  PipelineOutput out;

  auto t0 = clock::now();
  out.range_image = spherical_project(cloud, cfg.range);
  t.spherical_projection_ms = ms_since(t0);

  t0 = clock::now();
  out.seg_probs = infer_stage1(stage1, out.range_image);
  t.stage1_ms = ms_since(t0);

  t0 = clock::now();
  out.point_labels = unproject_labels(out.seg_probs, out.range_image, cloud);
  if (cfg.knn_enabled) out.point_labels = knn_smooth(out.point_labels, cloud, out.range_image, cfg.knn);
  t.unproject_ms = ms_since(t0);

  t0 = clock::now();
  out.bev = build_bev_grid(out.seg_probs, out.range_image, cloud, cfg.bev);
  out.drivable_mask = drivable_mask(out.bev.semantic, cfg.drivable_threshold);
  t.bev_ms = ms_since(t0);

  t0 = clock::now();
  out.grids = infer_stage2(stage2, out.bev);
  t.stage2_ms = ms_since(t0);

  t0 = clock::now();
  const auto eligible = output_occupancy(out.bev.occupancy, cfg.bev);
  out.post = postprocess(out.grids.class_grid, out.grids.box_grid, cfg.bev, cfg.cluster, eligible);
  out.detections = out.post.detections;
  t.postprocess_ms = ms_since(t0);

  t.total_ms = ms_since(t_start);
  if (timings != nullptr) *timings = t;
  return out;
}

}  // namespace mvln
