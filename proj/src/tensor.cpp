// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mvln/error.hpp"

namespace mvln {

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.depth) + ", " + std::to_string(s.height) + ", " + std::to_string(s.width) + ")";
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.numel()) {
    throw Error(ErrorCode::kShapeMismatch, "buffer of " + std::to_string(data_.size()) +
                                               " values cannot hold " + to_string(shape_));
  }
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace mvln
