// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvln/error.hpp"
#include "mvln/parallel.hpp"

namespace mvln::nn {
namespace {

// Rows per task so that one accumulator block stays around 64 KiB.
int rows_per_task(int out_width) { return std::max(1, 8192 / std::max(1, out_width)); }

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

void check_depth(const Tensor& input, int expected, const char* op) {
  if (input.depth() != expected) {
    throw Error(ErrorCode::kShapeMismatch, std::string(op) + " expects depth " + std::to_string(expected) +
                                               ", got " + to_string(input.shape()));
  }
}

}  // namespace

Shape conv_output_shape(const Shape& in, int filters, int stride) {
  return Shape{filters, (in.height + stride - 1) / stride, (in.width + stride - 1) / stride};
}

Tensor conv2d(const Tensor& input, const ConvParams& p) {
  check_depth(input, p.in_depth, "conv2d");
  if ((p.kernel != 1 && p.kernel != 3) || (p.stride != 1 && p.stride != 2)) {
    throw Error(ErrorCode::kShapeMismatch, "conv2d supports 1x1/3x3 kernels with stride 1 or 2");
  }
  const std::size_t kk = static_cast<std::size_t>(p.kernel) * p.kernel;
  if (p.weight.size() != static_cast<std::size_t>(p.filters) * p.in_depth * kk ||
      p.bias.size() != static_cast<std::size_t>(p.filters)) {
    throw Error(ErrorCode::kShapeMismatch, "conv2d parameter arrays do not match declared sizes");
  }

  const Shape out_shape = conv_output_shape(input.shape(), p.filters, p.stride);
  Tensor out(out_shape);
  const int in_h = input.height();
  const int in_w = input.width();
  const int out_h = out_shape.height;
  const int out_w = out_shape.width;
  const int pad = p.kernel / 2;
  const int stride = p.stride;
  const int block = rows_per_task(out_w);
  const int blocks = (out_h + block - 1) / block;

  parallel_for(static_cast<std::size_t>(p.filters) * blocks, [&](std::size_t task) {
    const int oc = static_cast<int>(task / blocks);
    const int y0 = static_cast<int>(task % blocks) * block;
    const int y1 = std::min(out_h, y0 + block);
    std::vector<double> acc(static_cast<std::size_t>(y1 - y0) * out_w, static_cast<double>(p.bias[oc]));

    for (int ic = 0; ic < p.in_depth; ++ic) {
      const float* plane = input.channel(ic).data();
      const float* wk = p.weight.data() + (static_cast<std::size_t>(oc) * p.in_depth + ic) * kk;
      for (int ky = 0; ky < p.kernel; ++ky) {
        for (int y = y0; y < y1; ++y) {
          const int iy = y * stride + ky - pad;
          if (iy < 0 || iy >= in_h) continue;
          const float* row = plane + static_cast<std::size_t>(iy) * in_w;
          double* a = acc.data() + static_cast<std::size_t>(y - y0) * out_w;
          for (int kx = 0; kx < p.kernel; ++kx) {
            const double w = wk[ky * p.kernel + kx];
            // Output columns whose tap lands inside the row.
            const int x_begin = std::max(0, -floor_div(kx - pad, stride));
            const int x_end = std::min(out_w, floor_div(in_w - 1 - kx + pad, stride) + 1);
            if (stride == 1) {
              const float* src = row + (kx - pad);
              for (int x = x_begin; x < x_end; ++x) a[x] += w * static_cast<double>(src[x]);
            } else {
              for (int x = x_begin; x < x_end; ++x) {
                a[x] += w * static_cast<double>(row[x * stride + kx - pad]);
              }
            }
          }
        }
      }
    }

    float* dst = out.channel(oc).data() + static_cast<std::size_t>(y0) * out_w;
    std::transform(acc.begin(), acc.end(), dst, [](double v) { return static_cast<float>(v); });
  });
  return out;
}

Tensor deconv2d(const Tensor& input, const DeconvParams& p) {
  check_depth(input, p.in_depth, "deconv2d");
  if (p.weight.size() != static_cast<std::size_t>(p.in_depth) * p.filters * 4 ||
      p.bias.size() != static_cast<std::size_t>(p.filters)) {
    throw Error(ErrorCode::kShapeMismatch, "deconv2d parameter arrays do not match declared sizes");
  }
  const int in_w = input.width();
  const int out_h = input.height() * 2;
  const int out_w = in_w * 2;
  Tensor out(Shape{p.filters, out_h, out_w});
  const int block = rows_per_task(out_w);
  const int blocks = (out_h + block - 1) / block;

  parallel_for(static_cast<std::size_t>(p.filters) * blocks, [&](std::size_t task) {
    const int oc = static_cast<int>(task / blocks);
    const int y0 = static_cast<int>(task % blocks) * block;
    const int y1 = std::min(out_h, y0 + block);
    std::vector<double> acc(static_cast<std::size_t>(y1 - y0) * out_w, static_cast<double>(p.bias[oc]));
    for (int ic = 0; ic < p.in_depth; ++ic) {
      const float* plane = input.channel(ic).data();
      const float* wk = p.weight.data() + (static_cast<std::size_t>(ic) * p.filters + oc) * 4;
      for (int y = y0; y < y1; ++y) {
        const float* row = plane + static_cast<std::size_t>(y / 2) * in_w;
        const double w0 = wk[(y % 2) * 2];
        const double w1 = wk[(y % 2) * 2 + 1];
        double* a = acc.data() + static_cast<std::size_t>(y - y0) * out_w;
        for (int x = 0; x < in_w; ++x) {
          const double v = row[x];
          a[2 * x] += w0 * v;
          a[2 * x + 1] += w1 * v;
        }
      }
    }
    float* dst = out.channel(oc).data() + static_cast<std::size_t>(y0) * out_w;
    std::transform(acc.begin(), acc.end(), dst, [](double v) { return static_cast<float>(v); });
  });
  return out;
}

void batchnorm_relu_inplace(Tensor& t, const BatchNormParams& p) {
  const auto depth = static_cast<std::size_t>(t.depth());
  if (p.gamma.size() != depth || p.beta.size() != depth || p.mean.size() != depth || p.var.size() != depth) {
    throw Error(ErrorCode::kShapeMismatch, "batchnorm statistics do not match depth " + std::to_string(depth));
  }
  parallel_for(depth, [&](std::size_t c) {
    const double scale = static_cast<double>(p.gamma[c]) / std::sqrt(static_cast<double>(p.var[c]) + kBatchNormEps);
    const double shift = static_cast<double>(p.beta[c]) - scale * static_cast<double>(p.mean[c]);
    for (float& v : t.channel(static_cast<int>(c))) {
      v = static_cast<float>(std::max(0.0, scale * static_cast<double>(v) + shift));
    }
  });
}

Tensor batchnorm_relu(Tensor input, const BatchNormParams& p) {
  batchnorm_relu_inplace(input, p);
  return input;
}

Tensor maxpool2(const Tensor& input) {
  if (input.height() % 2 != 0 || input.width() % 2 != 0) {
    throw Error(ErrorCode::kShapeMismatch, "maxpool2 needs even spatial dims, got " + to_string(input.shape()));
  }
  Tensor out(Shape{input.depth(), input.height() / 2, input.width() / 2});
  parallel_for(static_cast<std::size_t>(input.depth()), [&](std::size_t cs) {
    const int c = static_cast<int>(cs);
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) {
        out.at(c, y, x) = std::max({input.at(c, 2 * y, 2 * x), input.at(c, 2 * y, 2 * x + 1),
                                    input.at(c, 2 * y + 1, 2 * x), input.at(c, 2 * y + 1, 2 * x + 1)});
      }
    }
  });
  return out;
}

Tensor maxpool3_same(const Tensor& input) {
  Tensor out(input.shape());
  const int h = input.height();
  const int w = input.width();
  parallel_for(static_cast<std::size_t>(input.depth()), [&](std::size_t cs) {
    const int c = static_cast<int>(cs);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float m = -std::numeric_limits<float>::infinity();
        for (int yy = std::max(0, y - 1); yy <= std::min(h - 1, y + 1); ++yy) {
          for (int xx = std::max(0, x - 1); xx <= std::min(w - 1, x + 1); ++xx) {
            m = std::max(m, input.at(c, yy, xx));
          }
        }
        out.at(c, y, x) = m;
      }
    }
  });
  return out;
}

Tensor concat_depth(const Tensor& a, const Tensor& b) {
  if (a.depth() == 0) return b;
  if (b.depth() == 0) return a;
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorCode::kShapeMismatch,
                "concat of " + to_string(a.shape()) + " and " + to_string(b.shape()));
  }
  std::vector<float> data;
  data.reserve(a.size() + b.size());
  data.insert(data.end(), a.storage().begin(), a.storage().end());
  data.insert(data.end(), b.storage().begin(), b.storage().end());
  return Tensor(Shape{a.depth() + b.depth(), a.height(), a.width()}, std::move(data));
}

Tensor softmax_channels(const Tensor& input) {
  Tensor out(input.shape());
  const int depth = input.depth();
  const std::size_t plane = input.shape().plane();
  const float* src = input.storage().data();
  float* dst = out.storage().data();
  std::vector<double> e(static_cast<std::size_t>(depth));
  for (std::size_t i = 0; i < plane; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < depth; ++c) m = std::max(m, static_cast<double>(src[c * plane + i]));
    double sum = 0.0;
    for (int c = 0; c < depth; ++c) {
      e[c] = std::exp(static_cast<double>(src[c * plane + i]) - m);
      sum += e[c];
    }
    for (int c = 0; c < depth; ++c) dst[c * plane + i] = static_cast<float>(e[c] / sum);
  }
  return out;
}

Tensor apply(const Tensor& input, const ConvUnit& unit) {
  Tensor out = conv2d(input, unit.conv);
  if (unit.bn) batchnorm_relu_inplace(out, *unit.bn);
  return out;
}

Tensor apply(const Tensor& input, const DeconvUnit& unit) {
  Tensor out = deconv2d(input, unit.deconv);
  if (unit.bn) batchnorm_relu_inplace(out, *unit.bn);
  return out;
}

Tensor inception_module(const Tensor& input, const InceptionModuleParams& p) {
  Tensor b1 = apply(input, p.b1);
  Tensor b2 = apply(apply(input, p.b2_reduce), p.b2);
  Tensor b3 = apply(apply(apply(input, p.b3_reduce), p.b3a), p.b3b);
  Tensor b4 = apply(maxpool3_same(input), p.b4);
  return concat_depth(concat_depth(b1, b2), concat_depth(b3, b4));
}

Tensor inception_block(const Tensor& input, const InceptionBlockParams& p) {
  Tensor x = p.downsample ? maxpool2(input) : input;
  for (const auto& m : p.modules) x = inception_module(x, m);
  return x;
}

}  // namespace mvln::nn
