// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "mvln/tensor.hpp"

namespace mvln::nn {

inline constexpr double kBatchNormEps = 1e-5;

/// Same-padded convolution. Weights are (filters, in_depth, kernel, kernel).
struct ConvParams {
  int filters = 0;
  int in_depth = 0;
  int kernel = 3;  // 1 or 3
  int stride = 1;  // 1 or 2
  std::vector<float> weight;
  std::vector<float> bias;
};

/// 2x2 stride-2 transposed convolution. Weights are (in_depth, filters, 2, 2).
struct DeconvParams {
  int filters = 0;
  int in_depth = 0;
  std::vector<float> weight;
  std::vector<float> bias;
};

/// Inference-mode batch normalization statistics, one entry per channel.
struct BatchNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> mean;
  std::vector<float> var;
};

/// Convolution optionally followed by batchnorm + ReLU.
struct ConvUnit {
  ConvParams conv;
  std::optional<BatchNormParams> bn;
};

struct DeconvUnit {
  DeconvParams deconv;
  std::optional<BatchNormParams> bn;
};

/// Four-branch module: 1x1 | 1x1->3x3 | 1x1->3x3->3x3 | 3x3 maxpool->1x1,
/// concatenated in that order.
struct InceptionModuleParams {
  ConvUnit b1;
  ConvUnit b2_reduce;
  ConvUnit b2;
  ConvUnit b3_reduce;
  ConvUnit b3a;
  ConvUnit b3b;
  ConvUnit b4;
};

struct InceptionBlockParams {
  bool downsample = false;  // leading 2x2 maxpool
  std::vector<InceptionModuleParams> modules;
};

Tensor conv2d(const Tensor& input, const ConvParams& p);
Tensor deconv2d(const Tensor& input, const DeconvParams& p);
/// y = max(0, gamma * (x - mean) / sqrt(var + eps) + beta), applied in place.
void batchnorm_relu_inplace(Tensor& t, const BatchNormParams& p);
Tensor batchnorm_relu(Tensor input, const BatchNormParams& p);
Tensor maxpool2(const Tensor& input);
/// 3x3 window, stride 1, borders ignore out-of-range taps.
Tensor maxpool3_same(const Tensor& input);
Tensor concat_depth(const Tensor& a, const Tensor& b);
Tensor softmax_channels(const Tensor& input);

Tensor apply(const Tensor& input, const ConvUnit& unit);
Tensor apply(const Tensor& input, const DeconvUnit& unit);
Tensor inception_module(const Tensor& input, const InceptionModuleParams& p);
Tensor inception_block(const Tensor& input, const InceptionBlockParams& p);

Shape conv_output_shape(const Shape& in, int filters, int stride);

}  // namespace mvln::nn
