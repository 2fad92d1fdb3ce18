// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/losses.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "mvln/error.hpp"

namespace mvln::nn {
namespace {

std::size_t check_pixels(const Tensor& t, std::span<const std::uint16_t> target,
                         std::span<const std::uint8_t> mask) {
  const std::size_t plane = t.shape().plane();
  if (target.size() != plane) {
    throw Error(ErrorCode::kShapeMismatch, "target holds " + std::to_string(target.size()) +
                                               " pixels, logits plane is " + std::to_string(plane));
  }
  if (!mask.empty() && mask.size() != plane) throw Error(ErrorCode::kShapeMismatch, "mask size mismatch");
  std::size_t count = 0;
  for (std::size_t i = 0; i < plane; ++i) {
    if (!mask.empty() && mask[i] == 0) continue;
    if (target[i] >= t.depth()) {
      throw Error(ErrorCode::kShapeMismatch, "target class " + std::to_string(target[i]) + " out of range");
    }
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::kEmptyMask, "no pixel selected by mask");
  return count;
}

// Softmax of one pixel's channel vector into `p`, returning log p[target].
double pixel_softmax(const Tensor& logits, std::size_t i, std::uint16_t target, std::vector<double>& p) {
  const std::size_t plane = logits.shape().plane();
  const float* src = logits.storage().data();
  double m = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < logits.depth(); ++c) m = std::max(m, static_cast<double>(src[c * plane + i]));
  double sum = 0.0;
  for (int c = 0; c < logits.depth(); ++c) {
    p[c] = std::exp(static_cast<double>(src[c * plane + i]) - m);
    sum += p[c];
  }
  for (auto& v : p) v /= sum;
  return static_cast<double>(src[target * plane + i]) - m - std::log(sum);
}

}  // namespace

void LossConfig::validate() const {
  if (!(class_weight > 0.0) || !(regression_weight > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "loss weights must be positive");
  }
  if (!(focal_gamma >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "focal gamma must be >= 0");
}

LossResult cross_entropy(const Tensor& logits, std::span<const std::uint16_t> target,
                         std::span<const std::uint8_t> mask) {
  const std::size_t count = check_pixels(logits, target, mask);
  const std::size_t plane = logits.shape().plane();
  LossResult r{0.0, Tensor(logits.shape())};
  std::vector<double> p(static_cast<std::size_t>(logits.depth()));
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < plane; ++i) {
    if (!mask.empty() && mask[i] == 0) continue;
    const double log_pt = pixel_softmax(logits, i, target[i], p);
    r.loss -= log_pt;
    for (int c = 0; c < logits.depth(); ++c) {
      const double g = p[c] - (c == target[i] ? 1.0 : 0.0);
      r.grad.storage()[c * plane + i] = static_cast<float>(g * inv);
    }
  }
  r.loss *= inv;
  return r;
}

LossResult focal_loss(const Tensor& logits, std::span<const std::uint16_t> target, const LossConfig& cfg,
                      std::span<const std::uint8_t> mask) {
  cfg.validate();
  const std::size_t count = check_pixels(logits, target, mask);
  const std::size_t plane = logits.shape().plane();
  const double gamma = cfg.focal_gamma;
  const double alpha = cfg.focal_alpha;
  LossResult r{0.0, Tensor(logits.shape())};
  std::vector<double> p(static_cast<std::size_t>(logits.depth()));
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < plane; ++i) {
    if (!mask.empty() && mask[i] == 0) continue;
    const int t = target[i];
    const double log_pt = pixel_softmax(logits, i, target[i], p);
    const double pt = p[t];
    const double q = 1.0 - pt;
    const double focal = gamma == 0.0 ? 1.0 : std::pow(q, gamma);
    r.loss += -alpha * focal * log_pt;
    // dL/dz_j = dL/dp_t * p_t * (delta_tj - p_j), with
    // dL/dp_t * p_t = alpha * (gamma * q^(gamma-1) * p_t * log p_t - q^gamma).
    const double dfocal = gamma == 0.0 ? 0.0 : gamma * std::pow(q, gamma - 1.0);
    const double coeff = alpha * (dfocal * pt * log_pt - focal);
    for (int c = 0; c < logits.depth(); ++c) {
      const double g = coeff * ((c == t ? 1.0 : 0.0) - p[c]);
      r.grad.storage()[c * plane + i] = static_cast<float>(g * inv);
    }
  }
  r.loss *= inv;
  return r;
}

LossResult l1_loss(const Tensor& pred, const Tensor& target, std::span<const std::uint8_t> mask) {
  if (!(pred.shape() == target.shape())) {
    throw Error(ErrorCode::kShapeMismatch, "l1 of " + to_string(pred.shape()) + " vs " + to_string(target.shape()));
  }
  const std::size_t plane = pred.shape().plane();
  if (!mask.empty() && mask.size() != plane) throw Error(ErrorCode::kShapeMismatch, "mask size mismatch");
  std::size_t pixels = 0;
  for (std::size_t i = 0; i < plane; ++i) pixels += (mask.empty() || mask[i] != 0) ? 1 : 0;
  if (pixels == 0 || pred.depth() == 0) throw Error(ErrorCode::kEmptyMask, "no element selected by mask");

  const double inv = 1.0 / static_cast<double>(pixels * static_cast<std::size_t>(pred.depth()));
  LossResult r{0.0, Tensor(pred.shape())};
  for (int c = 0; c < pred.depth(); ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (!mask.empty() && mask[i] == 0) continue;
      const std::size_t k = c * plane + i;
      const double res = static_cast<double>(pred.storage()[k]) - static_cast<double>(target.storage()[k]);
      r.loss += std::abs(res);
      const double sign = res > 0.0 ? 1.0 : (res < 0.0 ? -1.0 : 0.0);
      r.grad.storage()[k] = static_cast<float>(sign * inv);
    }
  }
  r.loss *= inv;
  return r;
}

DetectionLoss detection_loss(const Tensor& class_logits, std::span<const std::uint16_t> class_target,
                             const Tensor& box_pred, const Tensor& box_target,
                             std::span<const std::uint8_t> box_mask, const LossConfig& cfg) {
  auto cls = focal_loss(class_logits, class_target, cfg);
  auto reg = l1_loss(box_pred, box_target, box_mask);
  DetectionLoss out;
  out.classification = cls.loss;
  out.regression = reg.loss;
  out.total = cfg.class_weight * cls.loss + cfg.regression_weight * reg.loss;
  out.class_grad = std::move(cls.grad);
  for (float& g : out.class_grad.storage()) g = static_cast<float>(g * cfg.class_weight);
  out.box_grad = std::move(reg.grad);
  for (float& g : out.box_grad.storage()) g = static_cast<float>(g * cfg.regression_weight);
  return out;
}

}  // namespace mvln::nn
