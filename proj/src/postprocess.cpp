// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "mvln/error.hpp"

namespace mvln {

double normalize_yaw(double yaw) {
  constexpr double kPi = std::numbers::pi;
  double y = std::remainder(yaw, 2.0 * kPi);  // [-pi, pi]
  if (y <= -kPi) y += 2.0 * kPi;
  return y;
}

double ClusterConfig::threshold_for(Det3 cls) const {
  const auto i = static_cast<std::size_t>(cls);
  if (i < class_threshold.size() && class_threshold[i]) return *class_threshold[i];
  return confidence_threshold;
}

void ClusterConfig::validate() const {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidConfig, "DBSCAN eps must be positive");
  if (min_pts < 1) throw Error(ErrorCode::kInvalidConfig, "DBSCAN min_pts must be >= 1");
  auto check = [](double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "confidence threshold outside [0,1]");
  };
  check(confidence_threshold);
  for (const auto& t : class_threshold) {
    if (t) check(*t);
  }
}

std::vector<CellHit> threshold_cells(const Tensor& class_grid, const ClusterConfig& cfg,
                                     std::span<const std::uint8_t> eligible) {
  if (class_grid.depth() != kNumDet3) {
    throw Error(ErrorCode::kShapeMismatch, "class grid must have 3 channels, got " + to_string(class_grid.shape()));
  }
  const std::size_t plane = class_grid.shape().plane();
  if (!eligible.empty() && eligible.size() != plane) throw Error(ErrorCode::kShapeMismatch, "eligibility mask size");
  std::vector<CellHit> hits;
  const float* p = class_grid.storage().data();
  for (std::size_t i = 0; i < plane; ++i) {
    if (!eligible.empty() && eligible[i] == 0) continue;
    const double vehicle = p[i];
    const double pedestrian = p[plane + i];
    const Det3 cls = pedestrian > vehicle ? Det3::kPedestrian : Det3::kVehicle;
    const double conf = std::max(vehicle, pedestrian);
    if (conf > cfg.threshold_for(cls)) {
      hits.push_back({static_cast<int>(i / class_grid.width()), static_cast<int>(i % class_grid.width()), cls, conf});
    }
  }
  return hits;
}

std::array<double, 2> cell_center(int row, int col, const BevConfig& cfg) {
  const double half = cfg.extent / 2.0;
  const double s = cfg.out_cell_size();
  return {-half + (row + 0.5) * s, -half + (col + 0.5) * s};
}

BoxParams box_params_at(const Tensor& box_grid, int row, int col) {
  if (box_grid.depth() != kNumBoxParams) throw Error(ErrorCode::kShapeMismatch, "box grid must have 6 channels");
  return {box_grid.at(0, row, col), box_grid.at(1, row, col), box_grid.at(2, row, col),
          box_grid.at(3, row, col), box_grid.at(4, row, col), box_grid.at(5, row, col)};
}

void set_box_params(Tensor& box_grid, int row, int col, const BoxParams& p) {
  if (box_grid.depth() != kNumBoxParams) throw Error(ErrorCode::kShapeMismatch, "box grid must have 6 channels");
  const std::array<double, 6> v = {p.dx, p.dy, p.width, p.length, p.sin_yaw, p.cos_yaw};
  for (int c = 0; c < kNumBoxParams; ++c) box_grid.at(c, row, col) = static_cast<float>(v[c]);
}

OrientedBox decode_cell(int row, int col, const BoxParams& params, const BevConfig& cfg, Det3 cls,
                        double confidence) {
  if (!(params.width > 0.0) || !(params.length > 0.0)) {
    throw Error(ErrorCode::kDegenerateBox, "cell (" + std::to_string(row) + ", " + std::to_string(col) +
                                               ") regressed a non-positive size");
  }
  const auto c = cell_center(row, col, cfg);
  return OrientedBox{c[0] + params.dx,
                     c[1] + params.dy,
                     params.width,
                     params.length,
                     normalize_yaw(std::atan2(params.sin_yaw, params.cos_yaw)),
                     cls,
                     confidence};
}

BoxParams encode_box(const OrientedBox& box, int row, int col, const BevConfig& cfg) {
  const auto c = cell_center(row, col, cfg);
  return {box.cx - c[0], box.cy - c[1], box.width, box.length, std::sin(box.yaw), std::cos(box.yaw)};
}

std::vector<int> dbscan(std::span<const Vec2> points, double eps, int min_pts) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidConfig, "DBSCAN eps must be positive");
  const std::size_t n = points.size();
  std::vector<int> label(n, kNoise);
  if (n == 0) return label;

  // Uniform grid with eps-sized buckets; neighbours lie in the 3x3 bucket block.
  auto key = [eps](const Vec2& p) {
    return std::pair<std::int64_t, std::int64_t>{static_cast<std::int64_t>(std::floor(p.x / eps)),
                                                 static_cast<std::int64_t>(std::floor(p.y / eps))};
  };
  struct Hash {
    std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& k) const noexcept {
      return std::hash<std::int64_t>{}(k.first * 73856093LL ^ k.second * 19349663LL);
    }
  };
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>, Hash> buckets;
  for (std::size_t i = 0; i < n; ++i) buckets[key(points[i])].push_back(i);

  const double eps2 = eps * eps;
  auto neighbours = [&](std::size_t i, std::vector<std::size_t>& out) {
    out.clear();
    const auto [kx, ky] = key(points[i]);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = buckets.find({kx + dx, ky + dy});
        if (it == buckets.end()) continue;
        for (auto j : it->second) {
          const double ex = points[j].x - points[i].x;
          const double ey = points[j].y - points[i].y;
          if (ex * ex + ey * ey <= eps2) out.push_back(j);
        }
      }
    }
    std::sort(out.begin(), out.end());
  };

  std::vector<std::uint8_t> visited(n, 0);
  std::vector<std::size_t> nbrs;
  std::vector<std::size_t> inner;
  int next_cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (visited[i]) continue;
    visited[i] = 1;
    neighbours(i, nbrs);
    if (nbrs.size() < static_cast<std::size_t>(min_pts)) continue;  // noise unless claimed later

    const int cluster = next_cluster++;
    label[i] = cluster;
    std::vector<std::size_t> queue(nbrs.begin(), nbrs.end());
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const auto j = queue[q];
      if (label[j] == kNoise) label[j] = cluster;
      if (visited[j]) continue;
      visited[j] = 1;
      neighbours(j, inner);
      if (inner.size() >= static_cast<std::size_t>(min_pts)) queue.insert(queue.end(), inner.begin(), inner.end());
    }
  }
  return label;
}

OrientedBox aggregate_cluster(std::span<const OrientedBox> members) {
  if (members.empty()) throw Error(ErrorCode::kEmptyCluster, "cannot aggregate an empty cluster");
  double cx = 0.0, cy = 0.0, w = 0.0, l = 0.0, s = 0.0, c = 0.0, conf = 0.0;
  for (const auto& m : members) {
    cx += m.cx;
    cy += m.cy;
    w += m.width;
    l += m.length;
    s += std::sin(m.yaw);
    c += std::cos(m.yaw);
    conf += m.confidence;
  }
  const double n = static_cast<double>(members.size());
  return OrientedBox{cx / n, cy / n, w / n, l / n, normalize_yaw(std::atan2(s / n, c / n)), members.front().cls,
                     conf / n};
}

PostprocessResult postprocess(const Tensor& class_grid, const Tensor& box_grid, const BevConfig& bev,
                              const ClusterConfig& cfg, std::span<const std::uint8_t> eligible) {
  cfg.validate();
  if (class_grid.height() != box_grid.height() || class_grid.width() != box_grid.width()) {
    throw Error(ErrorCode::kShapeMismatch, "class and box grids differ in size");
  }
  if (class_grid.height() != bev.out_cells() || class_grid.width() != bev.out_cells()) {
    throw Error(ErrorCode::kShapeMismatch, "grids do not match the BEV output resolution");
  }
  PostprocessResult r;
  for (const auto& hit : threshold_cells(class_grid, cfg, eligible)) {
    try {
      r.cell_boxes.push_back(decode_cell(hit.row, hit.col, box_params_at(box_grid, hit.row, hit.col), bev, hit.cls,
                                         hit.confidence));
      r.hits.push_back(hit);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateBox) throw;
      ++r.degenerate_cells;
    }
  }
  r.cluster_of.assign(r.cell_boxes.size(), kNoise);

  for (Det3 cls : {Det3::kVehicle, Det3::kPedestrian}) {
    std::vector<std::size_t> members;
    std::vector<Vec2> centroids;
    for (std::size_t i = 0; i < r.cell_boxes.size(); ++i) {
      if (r.cell_boxes[i].cls != cls) continue;
      members.push_back(i);
      centroids.push_back({r.cell_boxes[i].cx, r.cell_boxes[i].cy});
    }
    const auto labels = dbscan(centroids, cfg.eps, cfg.min_pts);
    const int clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::vector<OrientedBox>> grouped(static_cast<std::size_t>(clusters));
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (labels[k] == kNoise) continue;
      grouped[static_cast<std::size_t>(labels[k])].push_back(r.cell_boxes[members[k]]);
      r.cluster_of[members[k]] = static_cast<int>(r.detections.size()) + labels[k];
    }
    for (const auto& g : grouped) r.detections.push_back(aggregate_cluster(g));
  }
  return r;
}

std::vector<std::uint8_t> output_occupancy(std::span<const std::uint8_t> input_occupancy, const BevConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.cells);
  if (input_occupancy.size() != n * n) throw Error(ErrorCode::kShapeMismatch, "occupancy does not match BEV grid");
  const int out = cfg.out_cells();
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(out) * out, 0);
  for (std::size_t ix = 0; ix < n; ++ix) {
    for (std::size_t iy = 0; iy < n; ++iy) {
      if (input_occupancy[ix * n + iy] != 0) {
        mask[(ix / cfg.out_stride) * out + iy / cfg.out_stride] = 1;
      }
    }
  }
  return mask;
}

DetectionGrids encode_grids(std::span<const OrientedBox> boxes, const BevConfig& cfg) {
  const int out = cfg.out_cells();
  DetectionGrids g{Tensor(Shape{kNumDet3, out, out}), Tensor(Shape{kNumBoxParams, out, out})};
  std::fill(g.class_grid.channel(static_cast<int>(Det3::kUnknown)).begin(),
            g.class_grid.channel(static_cast<int>(Det3::kUnknown)).end(), 1.0F);
  for (const auto& box : boxes) {
    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    for (int row = 0; row < out; ++row) {
      for (int col = 0; col < out; ++col) {
        const auto center = cell_center(row, col, cfg);
        const double ex = center[0] - box.cx;
        const double ey = center[1] - box.cy;
        const double along = ex * c + ey * s;
        const double across = -ex * s + ey * c;
        if (std::abs(along) > box.length / 2.0 || std::abs(across) > box.width / 2.0) continue;
        const auto conf = static_cast<float>(box.confidence);
        for (int k = 0; k < kNumDet3; ++k) g.class_grid.at(k, row, col) = 0.0F;
        g.class_grid.at(static_cast<int>(box.cls), row, col) = conf;
        g.class_grid.at(static_cast<int>(Det3::kUnknown), row, col) = 1.0F - conf;
        set_box_params(g.box_grid, row, col, encode_box(box, row, col, cfg));
      }
    }
  }
  return g;
}

}  // namespace mvln
