// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvln/bench.hpp"
#include "mvln/detection_io.hpp"
#include "mvln/error.hpp"
#include "mvln/eval.hpp"
#include "mvln/image.hpp"
#include "mvln/mvlidarnet.hpp"
#include "mvln/parallel.hpp"
#include "mvln/synthetic.hpp"

namespace mvln::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string weights1;
  std::string weights2;
  bool knn = false;
  std::optional<double> threshold;
  bool random_weights = false;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string out;

  // command-specific
  std::string input;
  std::string gt;
  std::string detections;
  bool gt_seg7 = false;
  int ap_points = 40;
  int repetitions = 5;
  int warmup = 1;
  int synthetic = 0;
  bool svg = false;
};

// Raised for problems detected before any scan is touched.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_exists(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is required");
  if (!fs::exists(path)) throw ConfigError(what + " not found: " + path);
}

PipelineConfig load_config(const Options& o) {
  PipelineConfig cfg;
  if (!o.config.empty()) {
    require_exists(o.config, "config");
    cfg = PipelineConfig::load(o.config);
  }
  if (!o.weights1.empty()) cfg.weights1 = o.weights1;
  if (!o.weights2.empty()) cfg.weights2 = o.weights2;
  if (o.knn) cfg.knn_enabled = true;
  if (o.threshold) {
    cfg.cluster.confidence_threshold = *o.threshold;
    cfg.cluster.class_threshold = {};
  }
  cfg.validate();
  return cfg;
}

Stage1Graph stage1_for(const PipelineConfig& cfg, const Options& o) {
  if (o.random_weights) return build_stage1(random_params(stage1_spec(cfg.range.rows, cfg.range.cols), o.seed), cfg.range);
  require_exists(cfg.weights1.string(), "stage-1 weights (--weights1)");
  return build_stage1(load_weight_blob(cfg.weights1), cfg.range);
}

Stage2Graph stage2_for(const PipelineConfig& cfg, const Options& o) {
  if (o.random_weights) return build_stage2(random_params(stage2_spec(cfg.bev.cells), o.seed + 1), cfg.bev);
  require_exists(cfg.weights2.string(), "stage-2 weights (--weights2)");
  return build_stage2(load_weight_blob(cfg.weights2), cfg.bev);
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

struct FileOutcome {
  std::string name;
  bool ok = true;
  std::string message;
  std::size_t points = 0;
  std::size_t detections = 0;
};

// Runs `fn` over every file on a bounded pool; outcomes keep input order.
template <typename Fn>
std::vector<FileOutcome> for_each_file(const std::vector<fs::path>& files, unsigned jobs, std::ostream& err, Fn fn) {
  std::vector<FileOutcome> outcomes(files.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      outcomes[i].name = files[i].filename().string();
      try {
        fn(files[i], outcomes[i]);
      } catch (const std::exception& e) {
        outcomes[i].ok = false;
        outcomes[i].message = e.what();
        std::lock_guard lock(log_mutex);
        err << "error: " << files[i].string() << ": " << e.what() << "\n";
      }
    }
  };
  const unsigned n = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(files.size(), 1))));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  return outcomes;
}

int summarize(const std::string& command, const std::vector<FileOutcome>& outcomes, const fs::path& out_dir,
              std::ostream& out) {
  std::size_t failed = 0;
  auto files = nlohmann::json::array();
  for (const auto& o : outcomes) {
    failed += o.ok ? 0 : 1;
    nlohmann::json f{{"file", o.name}, {"ok", o.ok}, {"points", o.points}};
    if (command == "detect") f["detections"] = o.detections;
    if (!o.ok) f["error"] = o.message;
    files.push_back(f);
  }
  const nlohmann::json summary{{"command", command},
                               {"processed", outcomes.size() - failed},
                               {"failed", failed},
                               {"files", files}};
  write_text_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  out << command << ": " << outcomes.size() - failed << " processed, " << failed << " failed\n";
  return failed == 0 ? kExitOk : kExitFileFailure;
}

fs::path prepare_out_dir(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out is required");
  fs::create_directories(o.out);
  return o.out;
}

int cmd_segment(const Options& o, std::ostream& out, std::ostream& err) {
  require_exists(o.input, "scan directory");
  const auto cfg = load_config(o);
  const auto stage1 = stage1_for(cfg, o);
  const auto out_dir = prepare_out_dir(o);
  if (cfg.knn_enabled) fs::create_directories(out_dir / "knn");
  const auto files = list_files(o.input, ".bin");
  const auto outcomes = for_each_file(files, o.jobs, err, [&](const fs::path& scan, FileOutcome& r) {
    const auto cloud = load_kitti_bin(scan);
    r.points = cloud.size();
    const auto seg = run_segmentation(cloud, stage1, cfg);
    save_labels(seg.point_labels, out_dir / (scan.stem().string() + ".label"));
    if (cfg.knn_enabled) save_labels(seg.smoothed_labels, out_dir / "knn" / (scan.stem().string() + ".label"));
  });
  return summarize("segment", outcomes, out_dir, out);
}

int cmd_detect(const Options& o, std::ostream& out, std::ostream& err) {
  require_exists(o.input, "scan directory");
  const auto cfg = load_config(o);
  const auto stage1 = stage1_for(cfg, o);
  const auto stage2 = stage2_for(cfg, o);
  const auto out_dir = prepare_out_dir(o);
  if (cfg.knn_enabled) fs::create_directories(out_dir / "knn");
  const auto files = list_files(o.input, ".bin");
  const auto outcomes = for_each_file(files, o.jobs, err, [&](const fs::path& scan, FileOutcome& r) {
    const auto cloud = load_kitti_bin(scan);
    r.points = cloud.size();
    const auto result = run_pipeline(cloud, stage1, stage2, cfg);
    r.detections = result.detections.size();
    const auto stem = scan.stem().string();
    write_text_atomic(out_dir / (stem + ".txt"), format_detections(result.detections));
    write_text_atomic(out_dir / (stem + ".json"), detections_to_json(result.detections) + "\n");
    render_mask(cfg.bev, result.drivable_mask).write_ppm(out_dir / (stem + "_drivable.ppm"));
    render_bev(cfg.bev, result.bev.occupancy, result.drivable_mask, result.detections)
        .write_ppm(out_dir / (stem + "_bev.ppm"));
    if (cfg.knn_enabled) save_labels(result.point_labels, out_dir / "knn" / (stem + ".label"));
  });
  return summarize("detect", outcomes, out_dir, out);
}

std::vector<std::pair<fs::path, fs::path>> pair_files(const std::string& pred_dir, const std::string& gt_dir,
                                                      const std::string& ext) {
  require_exists(pred_dir, "prediction directory");
  require_exists(gt_dir, "ground-truth directory");
  std::vector<std::pair<fs::path, fs::path>> pairs;
  for (const auto& p : list_files(pred_dir, ext)) {
    const auto g = fs::path(gt_dir) / p.filename();
    if (!fs::exists(g)) throw Error(ErrorCode::kMissingPair, "no ground truth for " + p.filename().string());
    pairs.emplace_back(p, g);
  }
  if (pairs.empty()) throw Error(ErrorCode::kMissingPair, "no prediction/ground-truth pairs in " + pred_dir);
  return pairs;
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string fmt_metric(const std::optional<double>& v) {
  if (!v) return "     -";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%6.4f", *v);
  return buf;
}

int cmd_eval_seg(const Options& o, std::ostream& out, std::ostream&) {
  const auto pairs = pair_files(o.input, o.gt, ".label");
  LabelTable table = LabelTable::semantickitti_default();
  if (!o.config.empty()) {
    const auto cfg = load_config(o);
    if (!cfg.class_map.empty()) {
      require_exists(cfg.class_map.string(), "class map");
      table = LabelTable::load(cfg.class_map);
    }
  }
  ConfusionMatrix cm;
  for (const auto& [pred_path, gt_path] : pairs) {
    const auto n = fs::file_size(gt_path) / 4;
    auto pred = load_semantickitti_labels(pred_path, n);
    pred.taxonomy = Taxonomy::kSeg7;
    auto gt = load_semantickitti_labels(gt_path, n);
    if (o.gt_seg7) {
      gt.taxonomy = Taxonomy::kSeg7;
    } else {
      gt = remap_labels(gt, table);
    }
    validate_labels(pred, n);
    cm.add(pred, gt);
  }
  const auto report = segmentation_report(cm);
  nlohmann::json j{{"frames", pairs.size()}, {"points", cm.total()}, {"mean_iou", optional_json(report.mean_iou)}};
  auto per_class = nlohmann::json::object();
  out << "class        IoU\n";
  for (int c = 0; c < kNumSeg7; ++c) {
    const auto name = std::string(seg7_name(static_cast<Seg7>(c)));
    per_class[name] = optional_json(report.iou[c]);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-11s %s\n", name.c_str(), fmt_metric(report.iou[c]).c_str());
    out << buf;
  }
  out << "mIoU        " << fmt_metric(report.mean_iou) << "\n";
  j["iou"] = per_class;
  if (!o.out.empty()) write_text_atomic(o.out, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_eval_det(const Options& o, std::ostream& out, std::ostream&) {
  const auto pairs = pair_files(o.input, o.gt, ".txt");
  std::vector<FrameBoxes> frames;
  for (const auto& [pred_path, gt_path] : pairs) {
    frames.push_back(FrameBoxes{load_detections(pred_path), load_detections(gt_path)});
  }
  EvalConfig cfg;
  if (o.ap_points == 11) {
    cfg.interpolation = ApInterpolation::k11Point;
  } else if (o.ap_points != 40) {
    throw ConfigError("--ap-points must be 11 or 40");
  }
  nlohmann::json j{{"frames", frames.size()}, {"interpolation", o.ap_points}};
  out << "class       IoU   AP     ";
  for (const auto& [lo, hi] : cfg.range_buckets) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%3.0f-%-3.0fm  ", lo, hi);
    out << buf;
  }
  out << "\n";
  for (Det3 cls : {Det3::kVehicle, Det3::kPedestrian}) {
    const auto name = std::string(det3_name(cls));
    const auto global = match_and_ap(frames, cls, cfg.threshold_for(cls), cfg.interpolation);
    const auto buckets = range_bucketed_ap(frames, cls, cfg);
    nlohmann::json c{{"iou_threshold", cfg.threshold_for(cls)},
                     {"ap", optional_json(global.ap)},
                     {"num_gt", global.num_gt},
                     {"num_detections", global.num_detections},
                     {"true_positives", global.true_positives}};
    auto b = nlohmann::json::array();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-11s %.2f  %s ", name.c_str(), cfg.threshold_for(cls),
                  fmt_metric(global.ap).c_str());
    out << buf;
    for (std::size_t i = 0; i < buckets.size(); ++i) {
      b.push_back({{"min_range", cfg.range_buckets[i].first},
                   {"max_range", cfg.range_buckets[i].second},
                   {"ap", optional_json(buckets[i])}});
      out << fmt_metric(buckets[i]) << "    ";
    }
    out << "\n";
    c["range_buckets"] = b;
    j[name] = c;
  }
  if (!o.out.empty()) write_text_atomic(o.out, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream&) {
  const auto cfg = load_config(o);
  std::vector<PointCloud> scans;
  if (!o.input.empty()) {
    require_exists(o.input, "scan directory");
    for (const auto& f : list_files(o.input, ".bin")) scans.push_back(load_kitti_bin(f));
  }
  for (int i = 0; i < o.synthetic; ++i) {
    SyntheticSceneConfig sc;
    sc.range = cfg.range;
    scans.push_back(synthetic_scene(o.seed + static_cast<std::uint64_t>(i), sc).cloud);
  }
  if (scans.empty()) throw ConfigError("bench needs scans (directory or --synthetic N)");
  const auto stage1 = stage1_for(cfg, o);
  const auto stage2 = stage2_for(cfg, o);
  const auto report = run_bench(scans, stage1, stage2, cfg, BenchOptions{o.repetitions, o.warmup});
  const auto json = bench_report_json(report);
  if (o.out.empty()) {
    out << json;
  } else {
    write_text_atomic(o.out, json);
    out << bench_report_text(report);
  }
  return kExitOk;
}

int cmd_viz(const Options& o, std::ostream& out, std::ostream&) {
  require_exists(o.input, "scan");
  const auto cfg = load_config(o);
  if (o.out.empty()) throw ConfigError("--out is required");
  const auto cloud = load_kitti_bin(o.input);
  std::vector<OrientedBox> boxes;
  if (!o.detections.empty()) {
    require_exists(o.detections, "detection file");
    boxes = load_detections(o.detections);
  }
  const auto raster = bev_rasterize(cloud, cfg.bev);
  render_bev(cfg.bev, raster.occupancy, {}, boxes).write_ppm(o.out);
  if (o.svg) write_text_atomic(fs::path(o.out).replace_extension(".svg"), render_svg(cfg.bev, boxes));
  out << "viz: " << boxes.size() << " boxes drawn to " << o.out << "\n";
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out, std::ostream&) {
  const auto cfg = load_config(o);
  const auto out_dir = prepare_out_dir(o);
  const int count = std::max(1, o.synthetic);
  for (const char* sub : {"scans", "labels", "boxes"}) fs::create_directories(out_dir / sub);
  for (int i = 0; i < count; ++i) {
    SyntheticSceneConfig sc;
    sc.range = cfg.range;
    const auto scene = synthetic_scene(o.seed + static_cast<std::uint64_t>(i), sc);
    char stem[16];
    std::snprintf(stem, sizeof(stem), "%06d", i);
    save_kitti_bin(scene.cloud, out_dir / "scans" / (std::string(stem) + ".bin"));
    save_labels(scene.labels, out_dir / "labels" / (std::string(stem) + ".label"));
    write_text_atomic(out_dir / "boxes" / (std::string(stem) + ".txt"), format_detections(scene.objects));
  }
  out << "synth: " << count << " scenes written to " << out_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage LiDAR segmentation and detection"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--config", o.config, "Pipeline config file (key = value)");
    c->add_flag("--random-weights", o.random_weights, "Use seeded random weights instead of blobs");
    c->add_option("--seed", o.seed, "Seed for random weights and synthetic fixtures");
    c->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto weights = [&](CLI::App* c) {
    c->add_option("--weights1", o.weights1, "Stage-1 weight blob");
    c->add_option("--weights2", o.weights2, "Stage-2 weight blob");
  };

  auto* segment = app.add_subcommand("segment", "Label every point of each scan");
  segment->add_option("scans", o.input, "Directory of .bin scans")->required();
  segment->add_option("--out", o.out, "Output directory")->required();
  segment->add_flag("--knn", o.knn, "Also write kNN-smoothed labels");
  common(segment);
  weights(segment);

  auto* detect = app.add_subcommand("detect", "Detect objects and drivable space");
  detect->add_option("scans", o.input, "Directory of .bin scans")->required();
  detect->add_option("--out", o.out, "Output directory")->required();
  detect->add_option("--threshold", o.threshold, "Confidence threshold for every class");
  detect->add_flag("--knn", o.knn, "Smooth point labels with kNN voting");
  common(detect);
  weights(detect);

  auto* eval_seg = app.add_subcommand("eval-seg", "Per-class IoU and mIoU of point labels");
  eval_seg->add_option("predictions", o.input, "Directory of predicted seg7 .label files")->required();
  eval_seg->add_option("ground_truth", o.gt, "Directory of ground-truth .label files")->required();
  eval_seg->add_flag("--gt-seg7", o.gt_seg7, "Ground truth already uses seg7 ids");
  eval_seg->add_option("--out", o.out, "JSON report path");
  eval_seg->add_option("--config", o.config, "Pipeline config file; its class_map remaps ground truth");

  auto* eval_det = app.add_subcommand("eval-det", "Average precision of BEV detections");
  eval_det->add_option("predictions", o.input, "Directory of detection .txt files")->required();
  eval_det->add_option("ground_truth", o.gt, "Directory of ground-truth .txt files")->required();
  eval_det->add_option("--ap-points", o.ap_points, "Interpolation points, 40 or 11");
  eval_det->add_option("--out", o.out, "JSON report path");

  auto* bench = app.add_subcommand("bench", "Time every pipeline stage");
  bench->add_option("scans", o.input, "Directory of .bin scans");
  bench->add_option("--synthetic", o.synthetic, "Add N generated scans");
  bench->add_option("--repetitions", o.repetitions, "Timed passes over all scans")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", o.warmup, "Untimed passes before measuring")->check(CLI::NonNegativeNumber);
  bench->add_option("--out", o.out, "JSON report path (stdout when absent)");
  common(bench);
  weights(bench);

  auto* viz = app.add_subcommand("viz", "Render a top-down image of a scan and detections");
  viz->add_option("scan", o.input, "Scan .bin file")->required();
  viz->add_option("--detections", o.detections, "Detection .txt file");
  viz->add_option("--out", o.out, "Output .ppm path")->required();
  viz->add_flag("--svg", o.svg, "Also write an SVG of the boxes");
  viz->add_option("--config", o.config, "Pipeline config file (key = value)");

  auto* synth = app.add_subcommand("synth", "Write generated scans with seg7 labels and boxes");
  synth->add_option("--count", o.synthetic, "Number of scenes");
  synth->add_option("--seed", o.seed, "Scene seed");
  synth->add_option("--config", o.config, "Pipeline config file (key = value)");
  synth->add_option("--out", o.out, "Output directory")->required();

  std::vector<std::string> argv_storage{"mvln"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  set_num_threads(o.jobs > 1 ? 1 : 0);
  try {
    if (segment->parsed()) return cmd_segment(o, out, err);
    if (detect->parsed()) return cmd_detect(o, out, err);
    if (eval_seg->parsed()) return cmd_eval_seg(o, out, err);
    if (eval_det->parsed()) return cmd_eval_det(o, out, err);
    if (bench->parsed()) return cmd_bench(o, out, err);
    if (viz->parsed()) return cmd_viz(o, out, err);
    if (synth->parsed()) return cmd_synth(o, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    const bool config = e.code() == ErrorCode::kInvalidConfig || e.code() == ErrorCode::kShapeMismatch;
    return config ? kExitConfigError : kExitFileFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFileFailure;
  }
  return kExitConfigError;
}

}  // namespace mvln::cli
