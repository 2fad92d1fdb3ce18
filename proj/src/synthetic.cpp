// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/synthetic.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

namespace mvln {
namespace {

struct Obstacle {
  OrientedBox box;
  double height;
  Seg7 seg;
};

// Slab intersection in the box frame; returns the entry distance along the ray.
std::optional<double> hit_box(const Obstacle& o, const std::array<double, 3>& dir, double ground_z) {
  const double c = std::cos(o.box.yaw);
  const double s = std::sin(o.box.yaw);
  const double ox = -o.box.cx * c - o.box.cy * s;
  const double oy = o.box.cx * s - o.box.cy * c;
  const double dx = dir[0] * c + dir[1] * s;
  const double dy = -dir[0] * s + dir[1] * c;
  const double origin[3] = {ox, oy, 0.0};
  const double d[3] = {dx, dy, dir[2]};
  const double lo[3] = {-o.box.length / 2, -o.box.width / 2, ground_z};
  const double hi[3] = {o.box.length / 2, o.box.width / 2, ground_z + o.height};
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return std::nullopt;
      continue;
    }
    double ta = (lo[a] - origin[a]) / d[a];
    double tb = (hi[a] - origin[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return t0 > 0.0 ? std::optional<double>(t0) : std::nullopt;
}

}  // namespace

SyntheticScene synthetic_scene(std::uint64_t seed, const SyntheticSceneConfig& cfg) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.01);
  const double ground_z = -cfg.sensor_height;

  std::vector<Obstacle> obstacles;
  auto place = [&](Det3 cls, Seg7 seg, double w, double l, double h, double lane) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      const double x = (unit(rng) * 2.0 - 1.0) * 35.0;
      const double y = (unit(rng) * 2.0 - 1.0) * lane;
      if (std::hypot(x, y) < 4.0) continue;
      bool clear = true;
      for (const auto& o : obstacles) {
        if (std::hypot(o.box.cx - x, o.box.cy - y) < 6.0) clear = false;
      }
      if (!clear) continue;
      const double yaw = normalize_yaw((unit(rng) * 2.0 - 1.0) * std::numbers::pi);
      obstacles.push_back({OrientedBox{x, y, w, l, yaw, cls, 1.0}, h, seg});
      return;
    }
  };
  for (int i = 0; i < cfg.vehicles; ++i) {
    const bool truck = unit(rng) < 0.2;
    place(Det3::kVehicle, truck ? Seg7::kTruck : Seg7::kCar, truck ? 2.5 : 1.8, truck ? 8.0 : 4.4,
          truck ? 3.2 : 1.5, cfg.road_half_width);
  }
  for (int i = 0; i < cfg.pedestrians; ++i) {
    place(Det3::kPedestrian, Seg7::kPedestrian, 0.6, 0.6, 1.75, cfg.road_half_width + 4.0);
  }

  SyntheticScene scene;
  for (const auto& o : obstacles) scene.objects.push_back(o.box);
  scene.labels.taxonomy = Taxonomy::kSeg7;
  const double up = cfg.range.fov_up;
  const double down = cfg.range.fov_down;
  const double wall = 25.0 + unit(rng) * 30.0;
  for (int ring = 0; ring < cfg.rings; ++ring) {
    const double elev = up - (ring + 0.5) * (up - down) / cfg.rings;
    for (int k = 0; k < cfg.samples_per_ring; ++k) {
      const double az = -std::numbers::pi + (k + unit(rng)) * 2.0 * std::numbers::pi / cfg.samples_per_ring;
      const std::array<double, 3> dir{std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az), std::sin(elev)};
      double best = std::numeric_limits<double>::infinity();
      Seg7 label = Seg7::kUnknown;
      if (dir[2] < 0.0) {
        best = ground_z / dir[2];
        const double gy = best * dir[1];
        label = std::abs(gy) < cfg.road_half_width ? Seg7::kRoad : Seg7::kSidewalk;
      }
      for (const auto& o : obstacles) {
        if (const auto t = hit_box(o, dir, ground_z); t && *t < best) {
          best = *t;
          label = o.seg;
        }
      }
      // Buildings line the road on both sides.
      if (std::abs(dir[1]) > 1e-9) {
        const double t = (wall / 2.0 + cfg.road_half_width) / std::abs(dir[1]);
        if (t < best && t * dir[2] < 10.0) {
          best = t;
          label = Seg7::kUnknown;
        }
      }
      if (!std::isfinite(best) || best > cfg.max_range) continue;
      const double r = best + noise(rng);
      scene.cloud.points.push_back(Point{static_cast<float>(r * dir[0]), static_cast<float>(r * dir[1]),
                                         static_cast<float>(r * dir[2]), static_cast<float>(unit(rng))});
      scene.labels.labels.push_back(static_cast<std::uint16_t>(label));
    }
  }
  return scene;
}

PointCloud random_cloud(std::uint64_t seed, std::size_t count, double extent) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> coord(static_cast<float>(-extent / 2), static_cast<float>(extent / 2));
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) cloud.points.push_back(Point{coord(rng), coord(rng), coord(rng), unit(rng)});
  return cloud;
}

}  // namespace mvln
