// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "mvln/pointcloud_io.hpp"
#include "mvln/postprocess.hpp"
#include "mvln/projection.hpp"

namespace mvln {

struct SyntheticSceneConfig {
  int rings = 64;
  int samples_per_ring = 1875;  // 64 x 1875 = 120k rays
  RangeImageConfig range;
  double sensor_height = 1.73;
  double road_half_width = 6.0;
  int vehicles = 6;
  int pedestrians = 4;
  double max_range = 70.0;
};

/// Ray-cast scan of a flat road scene with box-shaped obstacles and a boundary wall.
struct SyntheticScene {
  PointCloud cloud;
  PointLabels labels;  // seg7
  std::vector<OrientedBox> objects;  // det3 ground truth, confidence 1
};

SyntheticScene synthetic_scene(std::uint64_t seed, const SyntheticSceneConfig& cfg = {});

/// Uniform random cloud inside a cube of side `extent` centred on the origin.
PointCloud random_cloud(std::uint64_t seed, std::size_t count, double extent = 80.0);

}  // namespace mvln
