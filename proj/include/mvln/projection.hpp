// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "mvln/blob.hpp"
#include "mvln/pointcloud_io.hpp"
#include "mvln/tensor.hpp"

namespace mvln {

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Spherical projection geometry. Defaults follow the HDL-64E nominal FOV.
struct RangeImageConfig {
  int rows = 64;
  int cols = 2048;
  double fov_up = deg2rad(3.0);
  double fov_down = deg2rad(-25.0);

  int cells() const noexcept { return rows * cols; }
  void validate() const;
};

/// Points grouped by cell: points of cell c are indices[offsets[c] .. offsets[c+1]),
/// ascending by point index.
struct CellIndex {
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> indices;

  std::span<const std::uint32_t> points_in(std::size_t cell) const {
    return {indices.data() + offsets[cell], offsets[cell + 1] - offsets[cell]};
  }
};

/// Builds a CellIndex from a per-point cell assignment (-1 = not binned).
CellIndex build_cell_index(std::span<const std::int32_t> point_cell, std::size_t num_cells);

inline constexpr int kRangeChannel = 0;
inline constexpr int kIntensityChannel = 1;
inline constexpr int kHeightChannel = 2;

struct RangeImage {
  RangeImageConfig config;
  Tensor channels;                      // (3, rows, cols): range m, intensity, z m
  std::vector<std::uint8_t> occupancy;  // rows * cols
  std::vector<std::int32_t> index_map;  // nearest point per cell, -1 if empty
  std::vector<std::int32_t> point_cell; // per input point, -1 if dropped
  std::size_t dropped_out_of_fov = 0;
  std::size_t dropped_degenerate = 0;
  std::size_t shadowed = 0;  // binned points that lost the min-range contest

  std::size_t occupied_cells() const;
};

/// Cell (row * cols + col) a point bins into, or nullopt when it is outside the
/// vertical FOV or sits at the origin.
std::optional<int> range_cell(const Point& p, const RangeImageConfig& cfg);

RangeImage spherical_project(const PointCloud& cloud, const RangeImageConfig& cfg);

/// Top-down grid centred on the ego vehicle.
struct BevConfig {
  int cells = 1024;
  double extent = 80.0;  // meters per side
  int out_stride = 4;

  double cell_size() const noexcept { return extent / cells; }
  int out_cells() const noexcept { return cells / out_stride; }
  double out_cell_size() const noexcept { return extent / out_cells(); }
  void validate() const;
};

inline constexpr int kMinHeightChannel = 0;
inline constexpr int kMaxHeightChannel = 1;
inline constexpr int kMeanIntensityChannel = 2;

struct BevRaster {
  BevConfig config;
  Tensor height;                        // (3, cells, cells): min z, max z, mean intensity
  std::vector<std::uint8_t> occupancy;  // cells * cells
  std::vector<std::int32_t> point_cell; // per input point, -1 if outside the extent
  CellIndex cell_points;
  std::size_t dropped = 0;
};

/// Cell (ix * cells + iy) for a point, ix along +x and iy along +y, with the
/// half-open extent [-extent/2, extent/2).
std::optional<int> bev_cell(const Point& p, const BevConfig& cfg);

BevRaster bev_rasterize(const PointCloud& cloud, const BevConfig& cfg);

/// Mean of per-point probability vectors in each BEV cell. Points without a
/// range-image cell carry no probability; cells holding only such points stay zero.
Tensor reproject_semantics(const Tensor& probs, const RangeImage& range_img, const PointCloud& cloud,
                           const BevConfig& cfg);

struct BevGrid {
  Tensor semantic;  // (7, cells, cells)
  Tensor height;    // (3, cells, cells)
  std::vector<std::uint8_t> occupancy;
};

BevGrid build_bev_grid(const Tensor& probs, const RangeImage& range_img, const PointCloud& cloud,
                       const BevConfig& cfg);

/// Per-pixel argmax over channels, ties to the lowest channel.
std::vector<std::uint16_t> argmax_channels(const Tensor& t);

/// Gives every point the label of the range cell it bins into; dropped points get unknown.
PointLabels unproject_labels(std::span<const std::uint16_t> cell_labels, const RangeImage& range_img,
                             const PointCloud& cloud);
PointLabels unproject_labels(const Tensor& probs, const RangeImage& range_img, const PointCloud& cloud);

struct KnnConfig {
  int k = 5;
  int window = 5;
  double cutoff = 1.0;  // meters of range difference

  void validate() const;
};

/// Majority vote over the k range-nearest other points within the window x window
/// neighbourhood of each point's range cell.
PointLabels knn_smooth(const PointLabels& labels, const PointCloud& cloud, const RangeImage& range_img,
                       const KnnConfig& cfg);

ParamStore to_param_store(const RangeImage& img);
ParamStore to_param_store(const BevGrid& grid);

}  // namespace mvln
