// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "mvln/error.hpp"

namespace mvln {

TimingStats summarize_timings(std::vector<double> samples_ms) {
  TimingStats s;
  s.samples = samples_ms.size();
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  const std::size_t n = samples_ms.size();
  s.min_ms = samples_ms.front();
  s.max_ms = samples_ms.back();
  s.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(n);
  s.median_ms = n % 2 == 1 ? samples_ms[n / 2] : (samples_ms[n / 2 - 1] + samples_ms[n / 2]) / 2.0;
  if (n >= 2) {
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    s.p95_ms = samples_ms[std::max<std::size_t>(rank, 1) - 1];
  }
  return s;
}

BenchReport run_bench(std::span<const PointCloud> scans, const Stage1Graph& stage1, const Stage2Graph& stage2,
                      const PipelineConfig& cfg, const BenchOptions& options) {
  if (options.repetitions < 1 || options.warmup < 0) {
    throw Error(ErrorCode::kInvalidConfig, "bench needs at least one repetition and a non-negative warmup");
  }
  BenchReport report;
  report.scans = scans.size();
  report.options = options;
  for (const auto& s : scans) report.points += s.size();

  std::vector<StageTimings> samples;
  for (int rep = 0; rep < options.warmup + options.repetitions; ++rep) {
    for (const auto& scan : scans) {
      StageTimings t;
      run_pipeline(scan, stage1, stage2, cfg, &t);
      if (rep >= options.warmup) samples.push_back(t);
    }
  }
  auto collect = [&](auto field) {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& t : samples) v.push_back(field(t));
    return summarize_timings(std::move(v));
  };
  report.stages = {
      {"spherical_projection", collect([](const StageTimings& t) { return t.spherical_projection_ms; })},
      {"stage1", collect([](const StageTimings& t) { return t.stage1_ms; })},
      {"unproject", collect([](const StageTimings& t) { return t.unproject_ms; })},
      {"bev", collect([](const StageTimings& t) { return t.bev_ms; })},
      {"stage2", collect([](const StageTimings& t) { return t.stage2_ms; })},
      {"postprocess", collect([](const StageTimings& t) { return t.postprocess_ms; })},
  };
  report.non_nn = collect(
      [](const StageTimings& t) { return t.spherical_projection_ms + t.bev_ms + t.postprocess_ms; });
  report.end_to_end = collect([](const StageTimings& t) { return t.total_ms; });
  return report;
}

namespace {

nlohmann::json stats_json(const TimingStats& s) {
  nlohmann::json j{{"samples", s.samples}, {"median_ms", s.median_ms}, {"mean_ms", s.mean_ms},
                   {"min_ms", s.min_ms},   {"max_ms", s.max_ms}};
  j["p95_ms"] = s.p95_ms ? nlohmann::json(*s.p95_ms) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

std::string bench_report_json(const BenchReport& report) {
  nlohmann::json j;
  j["scans"] = report.scans;
  j["points"] = report.points;
  j["repetitions"] = report.options.repetitions;
  j["warmup"] = report.options.warmup;
  auto stages = nlohmann::json::object();
  for (const auto& [name, s] : report.stages) stages[name] = stats_json(s);
  j["stages"] = stages;
  j["non_nn"] = stats_json(report.non_nn);
  j["end_to_end"] = stats_json(report.end_to_end);
  return j.dump(2) + "\n";
}

std::string bench_report_text(const BenchReport& report) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu scans, %zu points, %d repetitions after %d warmup\n", report.scans,
                report.points, report.options.repetitions, report.options.warmup);
  out += buf;
  auto row = [&](const std::string& name, const TimingStats& s) {
    if (s.p95_ms) {
      std::snprintf(buf, sizeof(buf), "%-22s median %10.3f ms  p95 %10.3f ms\n", name.c_str(), s.median_ms,
                    *s.p95_ms);
    } else {
      std::snprintf(buf, sizeof(buf), "%-22s median %10.3f ms  p95        n/a\n", name.c_str(), s.median_ms);
    }
    out += buf;
  };
  for (const auto& [name, s] : report.stages) row(name, s);
  row("non_nn", report.non_nn);
  row("end_to_end", report.end_to_end);
  return out;
}

}  // namespace mvln
