// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvln/mvlidarnet.hpp"

namespace mvln {

struct TimingStats {
  std::size_t samples = 0;
  double median_ms = 0.0;
  double mean_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  std::optional<double> p95_ms;  // needs at least two samples
};

/// Median of an even count is the mean of the two middle samples; p95 uses the
/// nearest-rank rule.
TimingStats summarize_timings(std::vector<double> samples_ms);

struct BenchOptions {
  int repetitions = 5;
  int warmup = 1;
};

struct BenchReport {
  std::size_t scans = 0;
  std::size_t points = 0;
  BenchOptions options;
  std::vector<std::pair<std::string, TimingStats>> stages;  // in pipeline order
  TimingStats non_nn;  // spherical projection + BEV rasterization + postprocess
  TimingStats end_to_end;
};

/// Runs the full pipeline over preloaded scans; each repetition visits every scan once
/// and contributes one sample per scan.
BenchReport run_bench(std::span<const PointCloud> scans, const Stage1Graph& stage1, const Stage2Graph& stage2,
                      const PipelineConfig& cfg, const BenchOptions& options);

std::string bench_report_json(const BenchReport& report);
std::string bench_report_text(const BenchReport& report);

}  // namespace mvln
