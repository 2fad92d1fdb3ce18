// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

// kNN vote by scanning every other point of the cloud.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "range_oracle.hpp"

namespace oracle {

inline mvln::PointLabels knn_smooth(const mvln::PointLabels& labels, const mvln::PointCloud& cloud,
                                    const mvln::RangeImageConfig& rcfg, int k, int window, double cutoff) {
  mvln::PointLabels out = labels;
  const int half = window / 2;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto ci = oracle::range_cell(cloud.points[i], rcfg);
    if (!ci) continue;
    const int ri = *ci / rcfg.cols;
    const int coli = *ci % rcfg.cols;
    const double range_i = point_range(cloud.points[i]);
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t j = 0; j < cloud.points.size(); ++j) {
      if (j == i) continue;
      const auto cj = oracle::range_cell(cloud.points[j], rcfg);
      if (!cj) continue;
      const int dr = std::abs(*cj / rcfg.cols - ri);
      const int raw = std::abs(*cj % rcfg.cols - coli);
      const int dc = std::min(raw, rcfg.cols - raw);
      if (dr > half || dc > half) continue;
      const double d = std::abs(point_range(cloud.points[j]) - range_i);
      if (d <= cutoff) cand.emplace_back(d, j);
    }
    if (cand.empty()) continue;
    std::sort(cand.begin(), cand.end());
    cand.resize(std::min<std::size_t>(cand.size(), static_cast<std::size_t>(k)));
    std::map<int, int> votes;
    for (const auto& [d, j] : cand) ++votes[labels.labels[j]];
    int best_count = 0;
    for (const auto& [lab, n] : votes) best_count = std::max(best_count, n);
    const int current = labels.labels[i];
    if (votes.contains(current) && votes[current] == best_count) continue;
    for (const auto& [lab, n] : votes) {
      if (n == best_count) {
        out.labels[i] = static_cast<std::uint16_t>(lab);
        break;
      }
    }
  }
  return out;
}

}  // namespace oracle
