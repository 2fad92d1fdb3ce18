// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "mvln/tensor.hpp"

namespace mvln::nn {

struct LossConfig {
  double class_weight = 5.0;
  double regression_weight = 1.0;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;

  void validate() const;
};

/// Loss value and its gradient with respect to the network output.
struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

// Targets and masks are per pixel (height * width, row-major). An empty mask
// selects every pixel; a non-empty mask with no set entry raises kEmptyMask.

/// Mean over masked pixels of -log softmax(logits)[target].
LossResult cross_entropy(const Tensor& logits, std::span<const std::uint16_t> target,
                         std::span<const std::uint8_t> mask = {});

/// Mean over masked pixels of -alpha * (1 - p_t)^gamma * log p_t, p = softmax(logits).
LossResult focal_loss(const Tensor& logits, std::span<const std::uint16_t> target, const LossConfig& cfg,
                      std::span<const std::uint8_t> mask = {});

/// Mean absolute error over all channels of masked pixels. Subgradient 0 at zero residual.
LossResult l1_loss(const Tensor& pred, const Tensor& target, std::span<const std::uint8_t> mask = {});

struct DetectionLoss {
  double total = 0.0;
  double classification = 0.0;
  double regression = 0.0;
  Tensor class_grad;
  Tensor box_grad;
};

/// class_weight * focal + regression_weight * L1 (regression restricted to box_mask).
DetectionLoss detection_loss(const Tensor& class_logits, std::span<const std::uint16_t> class_target,
                             const Tensor& box_pred, const Tensor& box_target,
                             std::span<const std::uint8_t> box_mask, const LossConfig& cfg);

}  // namespace mvln::nn
