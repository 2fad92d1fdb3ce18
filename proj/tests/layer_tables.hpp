// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

// Expected output dimensions (depth, height, width) of every layer of the two
// graphs at full resolution, inputs included.
#pragma once

#include <string>
#include <vector>

#include "mvln/tensor.hpp"

namespace golden {

struct Row {
  std::string name;
  mvln::Shape shape;
};

inline const std::vector<Row>& stage1_rows() {
  static const std::vector<Row> rows = {
      {"input", {3, 64, 2048}},   {"trunk1", {64, 64, 2048}},   {"trunk2", {64, 64, 2048}},
      {"trunk3", {128, 32, 1024}},      {"block1", {64, 32, 1024}},   {"block2", {64, 16, 512}},
      {"block3", {128, 8, 256}},        {"up1a", {256, 16, 512}},     {"up1b", {256 + 64, 16, 512}},
      {"up1c", {256, 16, 512}},         {"up1d", {256, 16, 512}},     {"up2a", {128, 32, 1024}},
      {"up2b", {128 + 64, 32, 1024}},   {"up2c", {128, 32, 1024}},    {"up2d", {128, 32, 1024}},
      {"up3a", {64, 64, 2048}},         {"up3b", {64, 64, 2048}},     {"up3c", {64, 64, 2048}},
      {"classhead1", {64, 64, 2048}},   {"classhead2", {7, 64, 2048}},
  };
  return rows;
}

inline const std::vector<Row>& stage2_rows() {
  static const std::vector<Row> rows = {
      {"semantics", {7, 1024, 1024}},    {"sem1", {16, 1024, 1024}},       {"sem2", {16, 1024, 1024}},
      {"sem3", {32, 512, 512}},          {"sem4", {32, 512, 512}},         {"height", {3, 1024, 1024}},
      {"height1", {16, 1024, 1024}},     {"height2", {16, 1024, 1024}},    {"height3", {32, 512, 512}},
      {"height4", {32, 512, 512}},       {"block0", {32 + 32, 512, 512}},  {"block1a", {64, 512, 512}},
      {"block1b", {64, 256, 256}},       {"block2a", {128, 256, 256}},     {"block2b", {128, 128, 128}},
      {"block3a", {256, 128, 128}},      {"block3b", {256, 64, 64}},       {"up1a", {128, 128, 128}},
      {"up1b", {128 + 128, 128, 128}},   {"up1c", {128, 128, 128}},        {"up2a", {64, 256, 256}},
      {"up2b", {64 + 64, 256, 256}},     {"up2c", {64, 256, 256}},         {"classhead1", {64, 256, 256}},
      {"classhead2", {32, 256, 256}},    {"classhead3", {3, 256, 256}},    {"bboxhead1", {64, 256, 256}},
      {"bboxhead2", {32, 256, 256}},     {"bboxhead3", {6, 256, 256}},
  };
  return rows;
}

}  // namespace golden
