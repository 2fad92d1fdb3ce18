// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mvln/blob.hpp"
#include "mvln/error.hpp"
#include "mvln/nn.hpp"
#include "mvln/tensor.hpp"

namespace mvln {

enum class LayerKind { kConv, kDeconv, kInception, kConcat };

/// One row of a layer table. Inputs name earlier layers or graph inputs.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  std::vector<std::string> inputs;
  int filters = 0;
  int kernel = 3;
  int stride = 1;
  bool bn_relu = true;
  int modules = 0;          // inception only
  bool downsample = false;  // inception only: leading 2x2 maxpool
};

struct GraphInput {
  std::string name;
  Shape shape;
};

struct GraphSpec {
  std::vector<GraphInput> inputs;
  std::vector<LayerSpec> layers;
  std::vector<std::string> outputs;
};

struct TraceEntry {
  std::string name;
  Shape shape;
};

/// Shapes of every graph input and layer output, in table order. No arithmetic is run.
std::vector<TraceEntry> shape_trace(const GraphSpec& spec);

/// A weight array a graph expects in its parameter store.
struct ArraySpec {
  std::string layer;
  std::string name;
  std::vector<std::uint32_t> dims;
};

std::vector<ArraySpec> required_arrays(const GraphSpec& spec);

/// Stored floats per layer, in table order.
std::vector<std::pair<std::string, std::size_t>> parameter_counts(const GraphSpec& spec);

/// He-normal convolution weights, zero biases, identity batchnorm statistics.
ParamStore random_params(const GraphSpec& spec, std::uint64_t seed);

/// Raised when a parameter store does not satisfy a graph.
class LayerError : public Error {
 public:
  LayerError(std::string layer, const std::string& what)
      : Error(ErrorCode::kShapeMismatch, "layer '" + layer + "': " + what), layer_(std::move(layer)) {}
  const std::string& layer() const noexcept { return layer_; }

 private:
  std::string layer_;
};

/// Validated, immutable executable graph.
class Network {
 public:
  using Observer = std::function<void(const std::string& layer, const Tensor& output)>;

  /// Throws LayerError naming the first layer whose arrays are missing or misshapen.
  static Network build(GraphSpec spec, const ParamStore& store);

  const GraphSpec& spec() const noexcept { return spec_; }

  /// Runs the graph on inputs ordered as spec().inputs; returns spec().outputs.
  std::vector<Tensor> run(std::vector<Tensor> inputs, const Observer& observer = {}) const;

 private:
  using Params = std::variant<std::monostate, nn::ConvUnit, nn::DeconvUnit, nn::InceptionBlockParams>;

  GraphSpec spec_;
  std::vector<Params> params_;
  std::vector<Shape> input_shapes_;
};

}  // namespace mvln
