// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <map>

#include "layer_tables.hpp"
#include "mvln/error.hpp"
#include "mvln/mvlidarnet.hpp"
#include "mvln/synthetic.hpp"
#include "support.hpp"

using namespace mvln;

namespace {

std::map<std::string, Shape> trace_map(const GraphSpec& spec) {
  std::map<std::string, Shape> m;
  for (const auto& e : shape_trace(spec)) m[e.name] = e.shape;
  return m;
}

// Stored floats of a conv/deconv unit: weights, bias, optional batchnorm stats.
std::size_t unit(std::size_t in, std::size_t out, std::size_t taps, bool bn = true) {
  return in * out * taps + out + (bn ? 4 * out : 0);
}

std::size_t inception_module(std::size_t in, std::size_t d) {
  const std::size_t b = d / 4;
  const std::size_t r = d / 8;
  return unit(in, b, 1) + unit(in, r, 1) + unit(r, b, 9) + unit(in, r, 1) + unit(r, b, 9) + unit(b, b, 9) +
         unit(in, b, 1);
}

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.range.rows = 16;
  cfg.range.cols = 128;
  cfg.bev = BevConfig{64, 80.0, 4};
  return cfg;
}

}  // namespace

TEST_CASE("stage-1 shape trace equals every table row") {
  const auto trace = trace_map(stage1_spec());
  const auto& rows = golden::stage1_rows();
  CHECK(trace.size() == rows.size());
  for (const auto& row : rows) {
    INFO(row.name);
    REQUIRE(trace.contains(row.name));
    CHECK(trace.at(row.name) == row.shape);
  }
}

TEST_CASE("stage-2 shape trace equals every table row") {
  const auto trace = trace_map(stage2_spec());
  const auto& rows = golden::stage2_rows();
  CHECK(trace.size() == rows.size());
  for (const auto& row : rows) {
    INFO(row.name);
    REQUIRE(trace.contains(row.name));
    CHECK(trace.at(row.name) == row.shape);
  }
}

TEST_CASE("per-layer parameter counts") {
  std::map<std::string, std::size_t> s1;
  for (const auto& [name, n] : parameter_counts(stage1_spec())) s1[name] = n;
  CHECK(s1["trunk1"] == unit(3, 64, 9));
  CHECK(s1["trunk3"] == unit(64, 128, 9));
  CHECK(s1["block1"] == inception_module(128, 64) + inception_module(64, 64));
  CHECK(s1["block3"] == inception_module(64, 128) + 2 * inception_module(128, 128));
  CHECK(s1["up1a"] == unit(128, 256, 4));
  CHECK(s1["up1b"] == 0);
  CHECK(s1["up1c"] == unit(320, 256, 1));
  CHECK(s1["up2c"] == unit(192, 128, 1));
  CHECK(s1["classhead2"] == unit(64, 7, 1, false));

  std::map<std::string, std::size_t> s2;
  for (const auto& [name, n] : parameter_counts(stage2_spec())) s2[name] = n;
  CHECK(s2["sem1"] == unit(7, 16, 9));
  CHECK(s2["height1"] == unit(3, 16, 9));
  CHECK(s2["block0"] == 0);
  CHECK(s2["block1a"] == unit(64, 64, 9));
  CHECK(s2["up1a"] == unit(256, 128, 4));
  CHECK(s2["up1c"] == unit(256, 128, 9));
  CHECK(s2["classhead3"] == unit(32, 3, 9, false));
  CHECK(s2["bboxhead3"] == unit(32, 6, 9, false));

  std::size_t total1 = 0;
  for (const auto& [n, c] : s1) total1 += c;
  std::size_t arrays = 0;
  for (const auto& a : required_arrays(stage1_spec())) {
    std::size_t k = 1;
    for (auto d : a.dims) k *= d;
    arrays += k;
  }
  CHECK(total1 == arrays);
}

TEST_CASE("graph build names the first offending layer") {
  const auto spec = stage1_spec(16, 128);
  auto store = random_params(spec, 1);
  CHECK_NOTHROW(Network::build(spec, store));

  try {
    Network::build(spec, ParamStore{});
    FAIL("empty store accepted");
  } catch (const LayerError& e) {
    CHECK(e.layer() == "trunk1");
    CHECK(e.code() == ErrorCode::kShapeMismatch);
  }

  ParamStore bad;
  for (const auto& [name, arr] : store.entries()) {
    if (name == "trunk3.weight") {
      bad.put(name, NamedArray{{127, 64, 3, 3}, std::vector<float>(127 * 64 * 9)});
    } else {
      bad.put(name, arr);
    }
  }
  try {
    Network::build(spec, bad);
    FAIL("bad trunk3 accepted");
  } catch (const LayerError& e) {
    CHECK(e.layer() == "trunk3");
  }
}

TEST_CASE("reduced stage-1 inference produces normalised probabilities") {
  const auto cfg = small_config();
  const auto g = build_stage1(random_params(stage1_spec(16, 128), 2), cfg.range);
  const auto scene = synthetic_scene(3, SyntheticSceneConfig{.rings = 16, .samples_per_ring = 400, .range = {}});
  const auto probs = infer_stage1(g, spherical_project(scene.cloud, cfg.range));
  CHECK(probs.shape() == Shape{7, 16, 128});
  const std::size_t plane = probs.shape().plane();
  for (std::size_t i = 0; i < plane; ++i) {
    double s = 0.0;
    for (int c = 0; c < 7; ++c) s += probs.data()[c * plane + i];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
  }

  // A blank image yields one probability vector everywhere.
  RangeImage blank = spherical_project({}, cfg.range);
  const auto flat = infer_stage1(g, blank);
  for (int c = 0; c < 7; ++c) {
    const auto ch = flat.channel(c);
    CHECK(std::all_of(ch.begin(), ch.end(), [&](float v) { return v == ch[0]; }));
  }
}

TEST_CASE("stage-2 stems stay independent until the concat") {
  const auto spec = stage2_spec(64);
  const auto net = Network::build(spec, random_params(spec, 4));
  std::mt19937_64 rng(5);
  const auto height = testing::random_tensor({3, 64, 64}, rng);
  std::map<std::string, std::vector<float>> first;
  std::map<std::string, std::vector<float>> second;
  const auto a = net.run({testing::random_tensor({7, 64, 64}, rng), height},
                         [&](const std::string& n, const Tensor& t) { first[n] = t.storage(); });
  const auto b = net.run({testing::random_tensor({7, 64, 64}, rng), height},
                         [&](const std::string& n, const Tensor& t) { second[n] = t.storage(); });
  for (const char* n : {"height1", "height2", "height3", "height4"}) CHECK(first[n] == second[n]);
  CHECK(first["sem1"] != second["sem1"]);
  CHECK(first["block0"] != second["block0"]);
  REQUIRE(a.size() == 2);
  CHECK(a[0].shape() == Shape{3, 16, 16});
  CHECK(a[1].shape() == Shape{6, 16, 16});
}

TEST_CASE("pipeline on an empty cloud yields nothing") {
  const auto cfg = small_config();
  const auto s1 = build_stage1(random_params(stage1_spec(16, 128), 6), cfg.range);
  const auto s2 = build_stage2(random_params(stage2_spec(64), 7), cfg.bev);
  PipelineConfig loose = cfg;
  loose.cluster.confidence_threshold = 0.0;
  loose.cluster.min_pts = 1;
  const auto out = run_pipeline({}, s1, s2, loose);
  CHECK(out.detections.empty());
  CHECK(std::count(out.drivable_mask.begin(), out.drivable_mask.end(), 1) == 0);
  CHECK(out.point_labels.size() == 0);
}

TEST_CASE("pipeline composition and determinism") {
  auto cfg = small_config();
  cfg.cluster.confidence_threshold = 0.3;
  cfg.cluster.min_pts = 1;
  const auto s1 = build_stage1(random_params(stage1_spec(16, 128), 8), cfg.range);
  const auto s2 = build_stage2(random_params(stage2_spec(64), 9), cfg.bev);
  const auto scene = synthetic_scene(10, SyntheticSceneConfig{.rings = 16, .samples_per_ring = 500, .range = {}});
  StageTimings t;
  const auto out = run_pipeline(scene.cloud, s1, s2, cfg, &t);
  CHECK(out.point_labels.size() == scene.cloud.size());
  CHECK(out.seg_probs.shape() == Shape{7, 16, 128});
  CHECK(out.grids.class_grid.shape() == Shape{3, 16, 16});
  CHECK(out.grids.box_grid.shape() == Shape{6, 16, 16});

  const auto eligible = output_occupancy(out.bev.occupancy, cfg.bev);
  const auto again = postprocess(out.grids.class_grid, out.grids.box_grid, cfg.bev, cfg.cluster, eligible);
  CHECK(again.detections.size() == out.detections.size());

  const auto road = out.bev.semantic.channel(static_cast<int>(Seg7::kRoad));
  for (std::size_t i = 0; i < road.size(); ++i) CHECK((out.drivable_mask[i] == 1) == (road[i] > 0.5F));

  const auto twice = run_pipeline(scene.cloud, s1, s2, cfg);
  CHECK(twice.seg_probs.storage() == out.seg_probs.storage());
  CHECK(twice.grids.box_grid.storage() == out.grids.box_grid.storage());
  CHECK(twice.detections.size() == out.detections.size());

  for (double v : {t.spherical_projection_ms, t.stage1_ms, t.unproject_ms, t.bev_ms, t.stage2_ms, t.postprocess_ms}) {
    CHECK(v >= 0.0);
    CHECK(t.total_ms >= v);
  }
}

TEST_CASE("injected vehicle grids give exactly one detection") {
  const BevConfig bev;
  const OrientedBox car{12.3, -4.1, 1.9, 4.6, 0.4, Det3::kVehicle, 0.95};
  const auto grids = encode_grids(std::vector<OrientedBox>{car}, bev);
  const auto r = postprocess(grids.class_grid, grids.box_grid, bev, ClusterConfig{});
  REQUIRE(r.detections.size() == 1);
  CHECK(r.detections[0].cls == Det3::kVehicle);
  CHECK(r.detections[0].cx == doctest::Approx(car.cx).epsilon(1e-6));
}

TEST_CASE("pipeline config parsing") {
  const auto cfg = PipelineConfig::parse(
      "fov_up_deg = 2\nfov_down_deg = -24.8\nrange_rows = 32\nrange_cols = 512\nbev_cells = 256\n"
      "threshold = 0.4\nthreshold.pedestrian = 0.3\nknn = true\nknn_k = 7\nweights1 = w/s1.blob\n",
      "/data");
  CHECK(cfg.range.rows == 32);
  CHECK(cfg.range.fov_up == doctest::Approx(deg2rad(2.0)));
  CHECK(cfg.bev.cells == 256);
  CHECK(cfg.cluster.threshold_for(Det3::kVehicle) == 0.4);
  CHECK(cfg.cluster.threshold_for(Det3::kPedestrian) == 0.3);
  CHECK(cfg.knn_enabled);
  CHECK(cfg.knn.k == 7);
  CHECK(cfg.weights1 == std::filesystem::path("/data/w/s1.blob"));
  CHECK_THROWS_AS(PipelineConfig::parse("bogus = 1\n"), Error);
  CHECK_THROWS_AS(PipelineConfig::parse("range_rows = 12\n"), Error);
  CHECK_THROWS_AS(PipelineConfig::parse("dbscan_eps = -1\n"), Error);
}
