// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mvln/error.hpp"
#include "mvln/nn.hpp"
#include "mvln/projection.hpp"
#include "oracles/knn_oracle.hpp"
#include "oracles/range_oracle.hpp"
#include "support.hpp"

using namespace mvln;

namespace {

RangeImageConfig symmetric_fov() {
  RangeImageConfig cfg;
  cfg.fov_up = deg2rad(15.0);
  cfg.fov_down = deg2rad(-15.0);
  return cfg;
}

// Point at the centre direction of range cell (row, col).
Point cell_point(int row, int col, double range, const RangeImageConfig& cfg) {
  const double elev = cfg.fov_up - (row + 0.5) * (cfg.fov_up - cfg.fov_down) / cfg.rows;
  const double az = std::numbers::pi * (1.0 - 2.0 * (col + 0.5) / cfg.cols);
  return Point{static_cast<float>(range * std::cos(elev) * std::cos(az)),
               static_cast<float>(range * std::cos(elev) * std::sin(az)), static_cast<float>(range * std::sin(elev)),
               0.5F};
}

Tensor one_hot_probs(const RangeImageConfig& cfg, Seg7 cls) {
  Tensor t(Shape{kNumSeg7, cfg.rows, cfg.cols});
  std::fill(t.channel(static_cast<int>(cls)).begin(), t.channel(static_cast<int>(cls)).end(), 1.0F);
  return t;
}

PointCloud lidar_like_cloud(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<float> xy(-60.0F, 60.0F);
  std::uniform_real_distribution<float> z(-4.0F, 1.5F);
  std::uniform_real_distribution<float> unit(0.0F, 1.0F);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.push_back({xy(rng), xy(rng), z(rng), unit(rng)});
  return c;
}

}  // namespace

TEST_CASE("empty cloud projects to an empty image") {
  const auto img = spherical_project({}, RangeImageConfig{});
  CHECK(img.occupied_cells() == 0);
  CHECK(img.channels.shape() == Shape{3, 64, 2048});
}

TEST_CASE("forward point lands in the middle row at the azimuth-zero column") {
  const auto cfg = symmetric_fov();
  PointCloud c{{{10.0F, 0.0F, 0.0F, 0.7F}}};
  const auto img = spherical_project(c, cfg);
  // row = floor(64 * 0.5) = 32, col = floor(2048 * (1 - 1/2)) = 1024
  const int cell = 32 * 2048 + 1024;
  CHECK(img.occupied_cells() == 1);
  CHECK(img.occupancy[cell] == 1);
  CHECK(img.index_map[cell] == 0);
  CHECK(img.channels.at(kRangeChannel, 32, 1024) == 10.0F);
  CHECK(img.channels.at(kIntensityChannel, 32, 1024) == 0.7F);
  CHECK(img.channels.at(kHeightChannel, 32, 1024) == 0.0F);
}

TEST_CASE("nearest point wins a shared cell and ties keep the lower index") {
  const auto cfg = symmetric_fov();
  PointCloud c{{{9.0F, 0.0F, 0.0F, 0.1F}, {5.0F, 0.0F, 0.0F, 0.2F}, {5.0F, 0.0F, 0.0F, 0.3F}}};
  const auto img = spherical_project(c, cfg);
  const int cell = 32 * 2048 + 1024;
  CHECK(img.index_map[cell] == 1);
  CHECK(img.channels.at(kRangeChannel, 32, 1024) == 5.0F);
  CHECK(img.shadowed == 2);
}

TEST_CASE("origin and out-of-fov points are dropped and counted") {
  PointCloud c{{{0, 0, 0, 0}, {1, 0, 5, 0}, {1, 0, -5, 0}, {10, 0, -1, 0}}};
  const auto img = spherical_project(c, RangeImageConfig{});
  CHECK(img.dropped_degenerate == 1);
  CHECK(img.dropped_out_of_fov == 2);
  CHECK(img.occupied_cells() == 1);
  CHECK(img.point_cell[0] == -1);
  CHECK(img.point_cell[3] >= 0);
}

TEST_CASE("projection matches brute-force binning on random clouds") {
  std::mt19937_64 rng(31);
  const RangeImageConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    auto cloud = lidar_like_cloud(rng, 1000 + rng() % 20000);
    // Exact duplicates force range ties.
    for (int d = 0; d < 50; ++d) cloud.points.push_back(cloud.points[rng() % cloud.size()]);
    const auto img = spherical_project(cloud, cfg);
    const auto ref = oracle::bin_cloud(cloud, cfg);
    std::size_t occupied = 0;
    std::size_t binned = 0;
    for (std::size_t c = 0; c < ref.size(); ++c) {
      CHECK(img.index_map[c] == ref[c].winner);
      if (ref[c].winner >= 0) {
        ++occupied;
        binned += static_cast<std::size_t>(ref[c].count);
        CHECK(img.channels.data()[c] == static_cast<float>(ref[c].range));
      }
    }
    CHECK(img.occupied_cells() == occupied);
    CHECK(img.shadowed == binned - occupied);
    CHECK(img.dropped_out_of_fov + img.dropped_degenerate + occupied + img.shadowed == cloud.size());
  }
}

TEST_CASE("unproject after project restores labels when cells hold one point") {
  std::mt19937_64 rng(32);
  const RangeImageConfig cfg;
  std::vector<int> cells(static_cast<std::size_t>(cfg.cells()));
  std::iota(cells.begin(), cells.end(), 0);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(cells.begin(), cells.end(), rng);
    const std::size_t n = 1000 + rng() % 5000;
    PointCloud cloud;
    PointLabels labels;
    std::uniform_real_distribution<double> range(2.0, 70.0);
    for (std::size_t i = 0; i < n; ++i) {
      cloud.points.push_back(cell_point(cells[i] / cfg.cols, cells[i] % cfg.cols, range(rng), cfg));
      labels.labels.push_back(static_cast<std::uint16_t>(rng() % kNumSeg7));
    }
    const auto img = spherical_project(cloud, cfg);
    REQUIRE(img.occupied_cells() == n);
    std::vector<std::uint16_t> cell_labels(static_cast<std::size_t>(cfg.cells()), 6);
    for (std::size_t c = 0; c < cell_labels.size(); ++c) {
      if (img.index_map[c] >= 0) cell_labels[c] = labels.labels[static_cast<std::size_t>(img.index_map[c])];
    }
    CHECK(unproject_labels(cell_labels, img, cloud).labels == labels.labels);
  }
}

TEST_CASE("unprojection labels every point of a cell and dropped points unknown") {
  const auto cfg = symmetric_fov();
  PointCloud c{{{5, 0, 0, 0}, {9, 0, 0, 0}, {1, 0, 5, 0}}};
  const auto img = spherical_project(c, cfg);
  const auto labels = unproject_labels(one_hot_probs(cfg, Seg7::kCar), img, c);
  CHECK(labels.labels == std::vector<std::uint16_t>{0, 0, 6});
}

TEST_CASE("bev rasterization statistics") {
  BevConfig cfg;
  const auto one = bev_rasterize(PointCloud{{{0, 0, 1.5F, 0.4F}}}, cfg);
  CHECK(std::count(one.occupancy.begin(), one.occupancy.end(), 1) == 1);
  const int c = 512 * 1024 + 512;
  CHECK(one.occupancy[c] == 1);
  CHECK(one.height.data()[kMinHeightChannel * one.occupancy.size() + c] == 1.5F);
  CHECK(one.height.data()[kMaxHeightChannel * one.occupancy.size() + c] == 1.5F);
  CHECK(one.height.data()[kMeanIntensityChannel * one.occupancy.size() + c] == 0.4F);

  const auto two = bev_rasterize(PointCloud{{{0.01F, 0.01F, -0.2F, 0.2F}, {0.02F, 0.02F, 1.0F, 0.6F}}}, cfg);
  const std::size_t plane = two.occupancy.size();
  CHECK(two.height.data()[kMinHeightChannel * plane + c] == -0.2F);
  CHECK(two.height.data()[kMaxHeightChannel * plane + c] == 1.0F);
  CHECK(two.height.data()[kMeanIntensityChannel * plane + c] == doctest::Approx(0.4));

  const auto edge = bev_rasterize(PointCloud{{{40.0F, 0, 0, 0}, {-40.0F, 0, 0, 0}, {0, 40.0F, 0, 0}}}, cfg);
  CHECK(edge.dropped == 2);
  CHECK(edge.point_cell[1] == 0 * 1024 + 512);
}

TEST_CASE("bev cell lists account for every in-extent point") {
  std::mt19937_64 rng(33);
  BevConfig cfg{256, 80.0, 4};
  std::uniform_real_distribution<float> xy(-50.0F, 50.0F);
  PointCloud cloud;
  for (int i = 0; i < 20000; ++i) cloud.points.push_back({xy(rng), xy(rng), xy(rng) / 20, 0.5F});
  const auto r = bev_rasterize(cloud, cfg);
  std::size_t inside = 0;
  for (const auto& p : cloud.points) inside += (std::abs(p.x) < 40 && std::abs(p.y) < 40) ? 1 : 0;
  CHECK(r.cell_points.indices.size() == inside);
  CHECK(r.dropped == cloud.size() - inside);
  const std::size_t plane = r.occupancy.size();
  for (std::size_t c = 0; c < plane; ++c) {
    if (!r.occupancy[c]) {
      CHECK(r.height.data()[c] == 0.0F);
      continue;
    }
    double zsum = 0.0;
    for (auto i : r.cell_points.points_in(c)) zsum += cloud.points[i].z;
    const double zmean = zsum / static_cast<double>(r.cell_points.points_in(c).size());
    CHECK(r.height.data()[c] <= zmean + 1e-6);
    CHECK(zmean <= r.height.data()[plane + c] + 1e-6);
  }
}

TEST_CASE("semantic reprojection averages per-point probabilities") {
  const auto rc = symmetric_fov();
  const BevConfig bc;
  PointCloud one{{{10, 0, 0, 0}}};
  const auto img = spherical_project(one, rc);
  const auto sem = reproject_semantics(one_hot_probs(rc, Seg7::kCar), img, one, bc);
  const std::size_t plane = static_cast<std::size_t>(bc.cells) * bc.cells;
  const auto cell = static_cast<std::size_t>(*bev_cell(one.points[0], bc));
  CHECK(sem.data()[cell] == 1.0F);
  for (int k = 1; k < kNumSeg7; ++k) CHECK(sem.data()[k * plane + cell] == 0.0F);

  // Two points in different range cells sharing one BEV cell.
  PointCloud two{{{10.0F, 0.0F, 0.0F, 0}, {10.0F, 0.0F, 0.05F, 0}}};
  const auto img2 = spherical_project(two, rc);
  REQUIRE(img2.point_cell[0] != img2.point_cell[1]);
  Tensor probs(Shape{kNumSeg7, rc.rows, rc.cols});
  const auto rplane = static_cast<std::size_t>(rc.cells());
  const auto c0 = static_cast<std::size_t>(img2.point_cell[0]);
  const auto c1 = static_cast<std::size_t>(img2.point_cell[1]);
  probs.storage()[0 * rplane + c0] = 0.6F;
  probs.storage()[4 * rplane + c0] = 0.4F;
  probs.storage()[4 * rplane + c1] = 1.0F;
  const auto sem2 = reproject_semantics(probs, img2, two, bc);
  const auto bcell = static_cast<std::size_t>(*bev_cell(two.points[0], bc));
  CHECK(sem2.data()[bcell] == doctest::Approx(0.3));
  CHECK(sem2.data()[4 * plane + bcell] == doctest::Approx(0.7));

  PointCloud far{{{100, 0, 0, 0}}};
  const auto sem3 = reproject_semantics(one_hot_probs(rc, Seg7::kCar), spherical_project(far, rc), far, bc);
  CHECK(std::all_of(sem3.data().begin(), sem3.data().end(), [](float v) { return v == 0.0F; }));

  CHECK_THROWS_AS(reproject_semantics(Tensor({7, 4, 4}), img, one, bc), Error);
}

TEST_CASE("bev semantic vectors sum to one on occupied cells") {
  std::mt19937_64 rng(34);
  const RangeImageConfig rc;
  const BevConfig bc{256, 80.0, 4};
  const auto cloud = lidar_like_cloud(rng, 30000);
  const auto img = spherical_project(cloud, rc);
  const auto probs = nn::softmax_channels(testing::random_tensor({7, rc.rows, rc.cols}, rng, -4.0F, 4.0F));
  const auto grid = build_bev_grid(probs, img, cloud, bc);
  const std::size_t plane = grid.occupancy.size();
  double worst = 0.0;
  for (std::size_t c = 0; c < plane; ++c) {
    double sum = 0.0;
    for (int k = 0; k < kNumSeg7; ++k) sum += grid.semantic.data()[k * plane + c];
    if (!grid.occupancy[c]) {
      CHECK(sum == 0.0);
    } else if (sum != 0.0) {
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("knn smoothing votes among range-nearest neighbours") {
  RangeImageConfig rc = symmetric_fov();
  KnnConfig kc{3, 5, 1.0};
  PointCloud single{{{10, 0, 0, 0}}};
  PointLabels one{{4}};
  CHECK(knn_smooth(one, single, spherical_project(single, rc), kc).labels == one.labels);

  // Centre point labelled road, three neighbours in adjacent cells {car, car, road}.
  PointCloud scene{{cell_point(32, 1024, 10.0, rc), cell_point(32, 1025, 10.1, rc), cell_point(31, 1024, 10.2, rc),
                    cell_point(33, 1023, 9.7, rc)}};
  PointLabels labels{{4, 0, 0, 4}};
  const auto img = spherical_project(scene, rc);
  CHECK(knn_smooth(labels, scene, img, kc).labels[0] == 0);

  // Pushing one car neighbour past the cutoff leaves a tie that keeps the current label.
  scene.points[2] = cell_point(31, 1024, 12.0, rc);
  CHECK(knn_smooth(labels, scene, spherical_project(scene, rc), kc).labels[0] == 4);
}

TEST_CASE("knn with k=1 and a 1x1 window is the identity on one point per cell") {
  std::mt19937_64 rng(35);
  const RangeImageConfig rc;
  PointCloud cloud;
  PointLabels labels;
  for (int i = 0; i < 2000; ++i) {
    cloud.points.push_back(cell_point(static_cast<int>(rng() % 64), static_cast<int>(i), 5.0 + i % 7, rc));
    labels.labels.push_back(static_cast<std::uint16_t>(rng() % 7));
  }
  const auto img = spherical_project(cloud, rc);
  CHECK(knn_smooth(labels, cloud, img, KnnConfig{1, 1, 1.0}).labels == labels.labels);
}

TEST_CASE("knn smoothing matches the all-pairs reference") {
  std::mt19937_64 rng(36);
  RangeImageConfig rc;
  rc.rows = 8;
  rc.cols = 32;
  for (int trial = 0; trial < 20; ++trial) {
    PointCloud cloud;
    PointLabels labels;
    std::uniform_real_distribution<double> range(5.0, 8.0);
    for (int i = 0; i < 300; ++i) {
      cloud.points.push_back(cell_point(static_cast<int>(rng() % 8), static_cast<int>(rng() % 32), range(rng), rc));
      labels.labels.push_back(static_cast<std::uint16_t>(rng() % 4));
    }
    const int k = 1 + static_cast<int>(rng() % 7);
    const int window = 1 + 2 * static_cast<int>(rng() % 3);
    const double cutoff = 0.1 + (rng() % 10) / 10.0;
    const auto got = knn_smooth(labels, cloud, spherical_project(cloud, rc), KnnConfig{k, window, cutoff});
    CHECK(got.labels == oracle::knn_smooth(labels, cloud, rc, k, window, cutoff).labels);
  }
}

TEST_CASE("range image and bev grid export as tensor blobs") {
  const auto rc = symmetric_fov();
  PointCloud c{{{10, 0, 0, 0.25F}}};
  const auto img = spherical_project(c, rc);
  const auto back = parse_blob(serialize_blob(to_param_store(img)));
  CHECK(back.tensor("range_image.channels").storage() == img.channels.storage());
  CHECK(back.at("range_image.index_map").values[32 * 2048 + 1024] == 0.0F);
}
