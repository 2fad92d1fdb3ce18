// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/projection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "mvln/error.hpp"

namespace mvln {
namespace {

void check_cloud_matches(const RangeImage& img, const PointCloud& cloud) {
  if (img.point_cell.size() != cloud.size()) {
    throw Error(ErrorCode::kShapeMismatch, "range image was built from " + std::to_string(img.point_cell.size()) +
                                               " points, cloud has " + std::to_string(cloud.size()));
  }
}

std::vector<float> as_floats(std::span<const std::uint8_t> v) { return {v.begin(), v.end()}; }
std::vector<float> as_floats(std::span<const std::int32_t> v) { return {v.begin(), v.end()}; }

}  // namespace

void RangeImageConfig::validate() const {
  if (rows < 1 || cols < 1) throw Error(ErrorCode::kInvalidConfig, "range image needs at least one row and column");
  if (!(fov_down < fov_up)) throw Error(ErrorCode::kInvalidConfig, "fov_down must be below fov_up");
}

void BevConfig::validate() const {
  if (cells < 1 || out_stride < 1 || cells % out_stride != 0) {
    throw Error(ErrorCode::kInvalidConfig, "BEV cells must be a positive multiple of out_stride");
  }
  if (!(extent > 0.0)) throw Error(ErrorCode::kInvalidConfig, "BEV extent must be positive");
}

void KnnConfig::validate() const {
  if (k < 1) throw Error(ErrorCode::kInvalidConfig, "knn k must be >= 1");
  if (window < 1 || window % 2 == 0) throw Error(ErrorCode::kInvalidConfig, "knn window must be odd");
  if (!(cutoff >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "knn cutoff must be >= 0");
}

CellIndex build_cell_index(std::span<const std::int32_t> point_cell, std::size_t num_cells) {
  CellIndex index;
  index.offsets.assign(num_cells + 1, 0);
  std::size_t binned = 0;
  for (auto c : point_cell) {
    if (c >= 0) {
      ++index.offsets[static_cast<std::size_t>(c) + 1];
      ++binned;
    }
  }
  for (std::size_t c = 0; c < num_cells; ++c) index.offsets[c + 1] += index.offsets[c];
  index.indices.resize(binned);
  std::vector<std::uint32_t> cursor(index.offsets.begin(), index.offsets.end() - 1);
  for (std::size_t i = 0; i < point_cell.size(); ++i) {
    if (point_cell[i] >= 0) index.indices[cursor[static_cast<std::size_t>(point_cell[i])]++] = static_cast<std::uint32_t>(i);
  }
  return index;
}

std::size_t RangeImage::occupied_cells() const {
  return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), std::uint8_t{1}));
}

std::optional<int> range_cell(const Point& p, const RangeImageConfig& cfg) {
  const double x = p.x;
  const double y = p.y;
  const double z = p.z;
  const double range = std::sqrt(x * x + y * y + z * z);
  if (!(range > 0.0)) return std::nullopt;
  const double elevation = std::asin(z / range);
  if (elevation < cfg.fov_down || elevation > cfg.fov_up) return std::nullopt;
  const double azimuth = std::atan2(y, x);

  const double fov = cfg.fov_up - cfg.fov_down;
  int row = static_cast<int>(std::floor(cfg.rows * (cfg.fov_up - elevation) / fov));
  row = std::clamp(row, 0, cfg.rows - 1);
  int col = static_cast<int>(std::floor(cfg.cols * (1.0 - (azimuth / std::numbers::pi + 1.0) / 2.0)));
  col %= cfg.cols;
  if (col < 0) col += cfg.cols;
  return row * cfg.cols + col;
}

RangeImage spherical_project(const PointCloud& cloud, const RangeImageConfig& cfg) {
  cfg.validate();
  RangeImage img;
  img.config = cfg;
  img.channels = Tensor(Shape{3, cfg.rows, cfg.cols});
  img.occupancy.assign(static_cast<std::size_t>(cfg.cells()), 0);
  img.index_map.assign(static_cast<std::size_t>(cfg.cells()), -1);
  img.point_cell.assign(cloud.size(), -1);

  std::vector<double> best(static_cast<std::size_t>(cfg.cells()), 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    const double range = std::sqrt(static_cast<double>(p.x) * p.x + static_cast<double>(p.y) * p.y +
                                   static_cast<double>(p.z) * p.z);
    if (!(range > 0.0)) {
      ++img.dropped_degenerate;
      continue;
    }
    const auto cell = range_cell(p, cfg);
    if (!cell) {
      ++img.dropped_out_of_fov;
      continue;
    }
    const auto c = static_cast<std::size_t>(*cell);
    img.point_cell[i] = *cell;
    // Strict comparison keeps the lower index on equal range.
    if (img.index_map[c] < 0 || range < best[c]) {
      if (img.index_map[c] >= 0) ++img.shadowed;
      img.index_map[c] = static_cast<std::int32_t>(i);
      best[c] = range;
    } else {
      ++img.shadowed;
    }
  }

  const std::size_t plane = static_cast<std::size_t>(cfg.cells());
  float* ch = img.channels.storage().data();
  for (std::size_t c = 0; c < plane; ++c) {
    const auto idx = img.index_map[c];
    if (idx < 0) continue;
    const auto& p = cloud.points[static_cast<std::size_t>(idx)];
    img.occupancy[c] = 1;
    ch[kRangeChannel * plane + c] = static_cast<float>(best[c]);
    ch[kIntensityChannel * plane + c] = p.intensity;
    ch[kHeightChannel * plane + c] = p.z;
  }
  return img;
}

std::optional<int> bev_cell(const Point& p, const BevConfig& cfg) {
  const double half = cfg.extent / 2.0;
  const double x = p.x;
  const double y = p.y;
  if (x < -half || x >= half || y < -half || y >= half) return std::nullopt;
  const double cell = cfg.cell_size();
  // Rounding can push a coordinate just below +half onto index `cells`.
  const int ix = std::min(cfg.cells - 1, static_cast<int>(std::floor((x + half) / cell)));
  const int iy = std::min(cfg.cells - 1, static_cast<int>(std::floor((y + half) / cell)));
  return ix * cfg.cells + iy;
}

BevRaster bev_rasterize(const PointCloud& cloud, const BevConfig& cfg) {
  cfg.validate();
  BevRaster r;
  r.config = cfg;
  const std::size_t plane = static_cast<std::size_t>(cfg.cells) * cfg.cells;
  r.height = Tensor(Shape{3, cfg.cells, cfg.cells});
  r.occupancy.assign(plane, 0);
  r.point_cell.assign(cloud.size(), -1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (const auto c = bev_cell(cloud.points[i], cfg)) {
      r.point_cell[i] = *c;
    } else {
      ++r.dropped;
    }
  }
  r.cell_points = build_cell_index(r.point_cell, plane);

  float* h = r.height.storage().data();
  const auto& offsets = r.cell_points.offsets;
  for (std::size_t c = 0; c < plane; ++c) {
    if (offsets[c] == offsets[c + 1]) continue;
    float zmin = std::numeric_limits<float>::infinity();
    float zmax = -std::numeric_limits<float>::infinity();
    double isum = 0.0;
    for (auto idx : r.cell_points.points_in(c)) {
      const auto& p = cloud.points[idx];
      zmin = std::min(zmin, p.z);
      zmax = std::max(zmax, p.z);
      isum += p.intensity;
    }
    r.occupancy[c] = 1;
    h[kMinHeightChannel * plane + c] = zmin;
    h[kMaxHeightChannel * plane + c] = zmax;
    h[kMeanIntensityChannel * plane + c] =
        static_cast<float>(isum / static_cast<double>(offsets[c + 1] - offsets[c]));
  }
  return r;
}

namespace {

Tensor reproject_with_cells(const Tensor& probs, const RangeImage& range_img, const PointCloud& cloud,
                            const BevConfig& cfg, const CellIndex& bev_points) {
  const auto& rc = range_img.config;
  if (probs.height() != rc.rows || probs.width() != rc.cols) {
    throw Error(ErrorCode::kShapeMismatch, "probabilities " + to_string(probs.shape()) +
                                               " do not match range image " + std::to_string(rc.rows) + "x" +
                                               std::to_string(rc.cols));
  }
  check_cloud_matches(range_img, cloud);
  const int depth = probs.depth();
  const std::size_t plane = static_cast<std::size_t>(cfg.cells) * cfg.cells;
  const std::size_t range_plane = static_cast<std::size_t>(rc.cells());
  Tensor out(Shape{depth, cfg.cells, cfg.cells});
  float* dst = out.storage().data();
  const float* src = probs.storage().data();
  std::vector<double> acc(static_cast<std::size_t>(depth));

  for (std::size_t c = 0; c < plane; ++c) {
    if (bev_points.offsets[c] == bev_points.offsets[c + 1]) continue;
    std::fill(acc.begin(), acc.end(), 0.0);
    std::size_t n = 0;
    for (auto idx : bev_points.points_in(c)) {
      const auto rcell = range_img.point_cell[idx];
      if (rcell < 0) continue;
      for (int k = 0; k < depth; ++k) acc[k] += src[k * range_plane + static_cast<std::size_t>(rcell)];
      ++n;
    }
    if (n == 0) continue;
    for (int k = 0; k < depth; ++k) dst[k * plane + c] = static_cast<float>(acc[k] / static_cast<double>(n));
  }
  return out;
}

}  // namespace

Tensor reproject_semantics(const Tensor& probs, const RangeImage& range_img, const PointCloud& cloud,
                           const BevConfig& cfg) {
  cfg.validate();
  std::vector<std::int32_t> cells(cloud.size(), -1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (const auto c = bev_cell(cloud.points[i], cfg)) cells[i] = *c;
  }
  const auto index = build_cell_index(cells, static_cast<std::size_t>(cfg.cells) * cfg.cells);
  return reproject_with_cells(probs, range_img, cloud, cfg, index);
}

BevGrid build_bev_grid(const Tensor& probs, const RangeImage& range_img, const PointCloud& cloud,
                       const BevConfig& cfg) {
  auto raster = bev_rasterize(cloud, cfg);
  BevGrid grid;
  grid.semantic = reproject_with_cells(probs, range_img, cloud, cfg, raster.cell_points);
  grid.height = std::move(raster.height);
  grid.occupancy = std::move(raster.occupancy);
  return grid;
}

std::vector<std::uint16_t> argmax_channels(const Tensor& t) {
  const std::size_t plane = t.shape().plane();
  std::vector<std::uint16_t> out(plane, 0);
  const float* src = t.storage().data();
  for (std::size_t i = 0; i < plane; ++i) {
    float best = src[i];
    for (int c = 1; c < t.depth(); ++c) {
      if (src[c * plane + i] > best) {
        best = src[c * plane + i];
        out[i] = static_cast<std::uint16_t>(c);
      }
    }
  }
  return out;
}

PointLabels unproject_labels(std::span<const std::uint16_t> cell_labels, const RangeImage& range_img,
                             const PointCloud& cloud) {
  check_cloud_matches(range_img, cloud);
  if (cell_labels.size() != static_cast<std::size_t>(range_img.config.cells())) {
    throw Error(ErrorCode::kShapeMismatch, "cell label grid does not match range image");
  }
  PointLabels out;
  out.taxonomy = Taxonomy::kSeg7;
  out.labels.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto c = range_img.point_cell[i];
    out.labels[i] = c < 0 ? static_cast<std::uint16_t>(Seg7::kUnknown) : cell_labels[static_cast<std::size_t>(c)];
  }
  return out;
}

PointLabels unproject_labels(const Tensor& probs, const RangeImage& range_img, const PointCloud& cloud) {
  return unproject_labels(argmax_channels(probs), range_img, cloud);
}

PointLabels knn_smooth(const PointLabels& labels, const PointCloud& cloud, const RangeImage& range_img,
                       const KnnConfig& cfg) {
  cfg.validate();
  check_cloud_matches(range_img, cloud);
  if (labels.size() != cloud.size()) throw Error(ErrorCode::kLengthMismatch, "labels do not match cloud");

  const auto& rc = range_img.config;
  const auto index = build_cell_index(range_img.point_cell, static_cast<std::size_t>(rc.cells()));
  std::vector<double> range(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    range[i] = std::sqrt(static_cast<double>(p.x) * p.x + static_cast<double>(p.y) * p.y +
                         static_cast<double>(p.z) * p.z);
  }

  PointLabels out = labels;
  const int half = cfg.window / 2;
  const int col_span = std::min(cfg.window, rc.cols);
  const int col_half = cfg.window > rc.cols ? 0 : half;
  const std::size_t num_labels =
      labels.labels.empty() ? 1 : static_cast<std::size_t>(*std::max_element(labels.labels.begin(), labels.labels.end())) + 1;
  std::vector<std::pair<double, std::uint32_t>> candidates;
  std::vector<std::uint32_t> votes;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto cell = range_img.point_cell[i];
    if (cell < 0) continue;
    const int row = cell / rc.cols;
    const int col = cell % rc.cols;
    candidates.clear();
    for (int r = std::max(0, row - half); r <= std::min(rc.rows - 1, row + half); ++r) {
      for (int n = 0; n < col_span; ++n) {
        // Columns wrap around the full sweep.
        const int cc = ((col - col_half + n) % rc.cols + rc.cols) % rc.cols;
        for (auto j : index.points_in(static_cast<std::size_t>(r * rc.cols + cc))) {
          if (j == i) continue;
          const double d = std::abs(range[j] - range[i]);
          if (d <= cfg.cutoff) candidates.emplace_back(d, j);
        }
      }
    }
    if (candidates.empty()) continue;
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.k), candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end());

    votes.assign(num_labels, 0);
    std::uint32_t best_count = 0;
    for (std::size_t n = 0; n < k; ++n) best_count = std::max(best_count, ++votes[labels.labels[candidates[n].second]]);
    const auto current = labels.labels[i];
    if (votes[current] == best_count) continue;
    for (std::size_t c = 0; c < votes.size(); ++c) {
      if (votes[c] == best_count) {
        out.labels[i] = static_cast<std::uint16_t>(c);
        break;
      }
    }
  }
  return out;
}

ParamStore to_param_store(const RangeImage& img) {
  ParamStore s;
  s.put("range_image.channels", img.channels);
  const auto rows = static_cast<std::uint32_t>(img.config.rows);
  const auto cols = static_cast<std::uint32_t>(img.config.cols);
  s.put("range_image.occupancy", NamedArray{{rows, cols}, as_floats(img.occupancy)});
  s.put("range_image.index_map", NamedArray{{rows, cols}, as_floats(img.index_map)});
  return s;
}

ParamStore to_param_store(const BevGrid& grid) {
  ParamStore s;
  s.put("bev.semantic", grid.semantic);
  s.put("bev.height", grid.height);
  const auto n = static_cast<std::uint32_t>(grid.height.height());
  s.put("bev.occupancy", NamedArray{{n, n}, as_floats(grid.occupancy)});
  return s;
}

}  // namespace mvln
