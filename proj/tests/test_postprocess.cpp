// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mvln/error.hpp"
#include "mvln/postprocess.hpp"
#include "oracles/dbscan_oracle.hpp"
#include "support.hpp"

using namespace mvln;

namespace {

constexpr double kPi = std::numbers::pi;

Tensor unknown_grid(int n) {
  Tensor g(Shape{kNumDet3, n, n});
  std::fill(g.channel(2).begin(), g.channel(2).end(), 1.0F);
  return g;
}

void set_class(Tensor& g, int row, int col, Det3 cls, float p) {
  for (int k = 0; k < kNumDet3; ++k) g.at(k, row, col) = 0.0F;
  g.at(static_cast<int>(cls), row, col) = p;
  g.at(2, row, col) = 1.0F - p;
}

}  // namespace

TEST_CASE("yaw normalisation maps into (-pi, pi]") {
  CHECK(normalize_yaw(kPi) == doctest::Approx(kPi));
  CHECK(normalize_yaw(-kPi) == doctest::Approx(kPi));
  CHECK(normalize_yaw(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK(normalize_yaw(0.25) == 0.25);
}

TEST_CASE("thresholding is strict and never emits unknown") {
  ClusterConfig cfg;
  CHECK(threshold_cells(unknown_grid(8), cfg).empty());
  auto g = unknown_grid(8);
  set_class(g, 2, 3, Det3::kVehicle, 0.9F);
  set_class(g, 5, 5, Det3::kPedestrian, 0.5F);
  const auto hits = threshold_cells(g, cfg);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].row == 2);
  CHECK(hits[0].col == 3);
  CHECK(hits[0].cls == Det3::kVehicle);
  CHECK(hits[0].confidence == doctest::Approx(0.9));

  cfg.class_threshold[1] = 0.4;
  CHECK(threshold_cells(g, cfg).size() == 2);
  std::vector<std::uint8_t> eligible(64, 0);
  eligible[5 * 8 + 5] = 1;
  CHECK(threshold_cells(g, cfg, eligible).size() == 1);
}

TEST_CASE("cell decoding") {
  const BevConfig cfg;
  const auto centre = decode_cell(10, 20, BoxParams{0, 0, 1, 2, 0, 1}, cfg);
  const auto c = cell_center(10, 20, cfg);
  CHECK(centre.cx == c[0]);
  CHECK(centre.cy == c[1]);
  CHECK(centre.yaw == 0.0);
  CHECK(decode_cell(0, 0, BoxParams{0, 0, 1, 1, 1, 0}, cfg).yaw == doctest::Approx(kPi / 2));

  const auto mid = decode_cell(128, 128, BoxParams{1.0, -0.5, 1.8, 4.4, 0, 1}, cfg);
  CHECK(mid.cx == doctest::Approx(1.0 + 0.15625).epsilon(1e-12));
  CHECK(mid.cy == doctest::Approx(-0.5 + 0.15625).epsilon(1e-12));

  CHECK_THROWS_AS(decode_cell(0, 0, BoxParams{0, 0, 0, 1, 0, 1}, cfg), Error);
  CHECK_THROWS_AS(decode_cell(0, 0, BoxParams{0, 0, 1, -1, 0, 1}, cfg), Error);
}

TEST_CASE("encode then decode recovers the box") {
  std::mt19937_64 rng(41);
  const BevConfig cfg;
  std::uniform_real_distribution<double> pos(-39.0, 39.0);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const OrientedBox b{pos(rng), pos(rng), 1.8, 4.2, normalize_yaw(yaw(rng)), Det3::kVehicle, 1.0};
    const int row = static_cast<int>(rng() % 256);
    const int col = static_cast<int>(rng() % 256);
    const auto d = decode_cell(row, col, encode_box(b, row, col, cfg), cfg);
    CHECK(std::abs(d.cx - b.cx) < 1e-9);
    CHECK(std::abs(d.cy - b.cy) < 1e-9);
    CHECK(std::abs(normalize_yaw(d.yaw - b.yaw)) < 1e-9);
  }
}

TEST_CASE("dbscan small cases") {
  std::vector<Vec2> far{{0, 0}, {10, 0}};
  CHECK(dbscan(far, 0.8, 1) == std::vector<int>{0, 1});
  std::vector<Vec2> line{{0, 0}, {0.5, 0}, {1.0, 0}, {1.5, 0}, {2.0, 0}};
  CHECK(dbscan(line, 0.8, 3) == std::vector<int>(5, 0));
  std::vector<Vec2> lone{{1, 1}};
  CHECK(dbscan(lone, 0.8, 2) == std::vector<int>{kNoise});
  CHECK(dbscan({}, 1.0, 1).empty());
}

TEST_CASE("dbscan matches the naive reference partition") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = rng() % 201;
    const double eps = 0.2 + (rng() % 1000) / 1000.0 * 1.5;
    const int min_pts = 1 + static_cast<int>(rng() % 6);
    std::uniform_real_distribution<double> coord(0.0, 3.0 + (rng() % 10));
    std::vector<Vec2> pts(n);
    for (auto& p : pts) p = {coord(rng), coord(rng)};
    // Snap some points to a lattice so exact-eps distances occur.
    for (std::size_t i = 0; i < n / 4; ++i) pts[i] = {std::round(pts[i].x / eps) * eps, std::round(pts[i].y)};
    CHECK(dbscan(pts, eps, min_pts) == oracle::dbscan(pts, eps, min_pts));
  }
}

TEST_CASE("cluster aggregation") {
  const OrientedBox one{1, 2, 1.5, 4, 0.3, Det3::kVehicle, 0.8};
  const auto same = aggregate_cluster(std::vector<OrientedBox>{one});
  CHECK(same.cx == one.cx);
  CHECK(same.yaw == doctest::Approx(one.yaw).epsilon(1e-15));
  CHECK(same.confidence == one.confidence);

  const std::vector<OrientedBox> wrap{{0, 0, 1, 1, 170 * kPi / 180, Det3::kVehicle, 0.6},
                                      {2, 0, 1, 1, -170 * kPi / 180, Det3::kVehicle, 1.0}};
  const auto w = aggregate_cluster(wrap);
  CHECK(std::abs(w.yaw) == doctest::Approx(kPi));
  CHECK(w.cx == 1.0);
  CHECK(w.cy == 0.0);
  CHECK(w.confidence == doctest::Approx(0.8));
  CHECK_THROWS_AS(aggregate_cluster({}), Error);

  std::mt19937_64 rng(43);
  std::vector<OrientedBox> members;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 9; ++i) members.push_back({u(rng), u(rng), 1 + u(rng) / 4, 4 + u(rng), u(rng), Det3::kVehicle, 0.7});
  const auto a = aggregate_cluster(members);
  std::shuffle(members.begin(), members.end(), rng);
  const auto b = aggregate_cluster(members);
  CHECK(a.cx == doctest::Approx(b.cx).epsilon(1e-12));
  CHECK(a.yaw == doctest::Approx(b.yaw).epsilon(1e-12));
}

TEST_CASE("postprocess clusters per class and drops noise") {
  BevConfig cfg{256, 80.0, 4};
  const int n = cfg.out_cells();
  auto cls = unknown_grid(n);
  Tensor box(Shape{kNumBoxParams, n, n});
  // Three vehicle cells regressing one centroid, a pedestrian group on top of
  // them that must stay separate, and one isolated vehicle cell.
  const OrientedBox car{0.5, 0.5, 1.8, 4.0, 0.2, Det3::kVehicle, 0.9};
  const OrientedBox ped{0.6, 0.4, 0.6, 0.6, 0.0, Det3::kPedestrian, 0.8};
  for (int c = 0; c < 3; ++c) {
    set_class(cls, 32, 32 + c, Det3::kVehicle, 0.9F);
    set_box_params(box, 32, 32 + c, encode_box(car, 32, 32 + c, cfg));
    set_class(cls, 33, 32 + c, Det3::kPedestrian, 0.8F);
    set_box_params(box, 33, 32 + c, encode_box(ped, 33, 32 + c, cfg));
  }
  set_class(cls, 5, 5, Det3::kVehicle, 0.95F);
  set_box_params(box, 5, 5, encode_box(OrientedBox{-30, -30, 2, 4, 0, Det3::kVehicle, 1}, 5, 5, cfg));
  // A degenerate cell is skipped and counted.
  set_class(cls, 60, 60, Det3::kVehicle, 0.99F);

  const auto r = postprocess(cls, box, cfg, ClusterConfig{});
  CHECK(r.hits.size() == 7);
  CHECK(r.degenerate_cells == 1);
  REQUIRE(r.detections.size() == 2);
  CHECK(r.detections[0].cls == Det3::kVehicle);
  CHECK(r.detections[0].cx == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.detections[1].cls == Det3::kPedestrian);
  CHECK(r.detections[1].cy == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(std::count(r.cluster_of.begin(), r.cluster_of.end(), kNoise) == 1);
  CHECK(r.detections.size() <= r.hits.size());
}

TEST_CASE("grid encoding paints boxes that postprocess recovers") {
  const BevConfig cfg;
  const std::vector<OrientedBox> objects{{10.0, 5.0, 1.9, 4.5, 0.7, Det3::kVehicle, 0.9},
                                         {-12.0, 8.0, 2.5, 8.0, -2.9, Det3::kVehicle, 0.8},
                                         {0.0, 0.0, 0.6, 0.6, 0.0, Det3::kPedestrian, 0.7}};
  const auto grids = encode_grids(objects, cfg);
  const auto r = postprocess(grids.class_grid, grids.box_grid, cfg, ClusterConfig{});
  REQUIRE(r.detections.size() == 3);
  // Detections follow cluster order, so pair each object with its nearest detection.
  for (const auto& obj : objects) {
    const auto near = std::min_element(r.detections.begin(), r.detections.end(), [&](const auto& a, const auto& b) {
      return std::hypot(a.cx - obj.cx, a.cy - obj.cy) < std::hypot(b.cx - obj.cx, b.cy - obj.cy);
    });
    CHECK(std::hypot(near->cx - obj.cx, near->cy - obj.cy) < 1e-6);
    CHECK(std::abs(normalize_yaw(near->yaw - obj.yaw)) < 1e-6);
    CHECK(near->cls == obj.cls);
  }
}

TEST_CASE("output occupancy pools input cells by the stride") {
  BevConfig cfg{16, 80.0, 4};
  std::vector<std::uint8_t> occ(256, 0);
  occ[5 * 16 + 9] = 1;
  const auto out = output_occupancy(occ, cfg);
  REQUIRE(out.size() == 16);
  CHECK(out[1 * 4 + 2] == 1);
  CHECK(std::count(out.begin(), out.end(), 1) == 1);
}
