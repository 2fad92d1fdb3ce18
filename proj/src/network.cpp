// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

namespace mvln {
namespace {

using Dims = std::vector<std::uint32_t>;

Dims dims(std::initializer_list<int> v) {
  Dims d;
  for (int x : v) d.push_back(static_cast<std::uint32_t>(x));
  return d;
}

// Parameter-carrying sub-unit of a layer, e.g. "block1.m0.b2_reduce".
struct UnitSpec {
  std::string prefix;
  bool deconv = false;
  int filters = 0;
  int in_depth = 0;
  int kernel = 3;
  int stride = 1;
  bool bn = true;
};

// Branch widths of one inception module: four equal branches, reducers at half width.
struct InceptionWidths {
  int branch;
  int reduce;
};

InceptionWidths inception_widths(int out_depth) { return {out_depth / 4, out_depth / 8}; }

std::vector<UnitSpec> inception_units(const std::string& prefix, int in_depth, int out_depth) {
  const auto w = inception_widths(out_depth);
  return {
      {prefix + ".b1", false, w.branch, in_depth, 1, 1, true},
      {prefix + ".b2_reduce", false, w.reduce, in_depth, 1, 1, true},
      {prefix + ".b2", false, w.branch, w.reduce, 3, 1, true},
      {prefix + ".b3_reduce", false, w.reduce, in_depth, 1, 1, true},
      {prefix + ".b3a", false, w.branch, w.reduce, 3, 1, true},
      {prefix + ".b3b", false, w.branch, w.branch, 3, 1, true},
      {prefix + ".b4", false, w.branch, in_depth, 1, 1, true},
  };
}

std::vector<UnitSpec> layer_units(const LayerSpec& layer, int in_depth) {
  switch (layer.kind) {
    case LayerKind::kConv:
      return {{layer.name, false, layer.filters, in_depth, layer.kernel, layer.stride, layer.bn_relu}};
    case LayerKind::kDeconv:
      return {{layer.name, true, layer.filters, in_depth, 2, 2, layer.bn_relu}};
    case LayerKind::kInception: {
      std::vector<UnitSpec> units;
      int depth = in_depth;
      for (int m = 0; m < layer.modules; ++m) {
        auto mod = inception_units(layer.name + ".m" + std::to_string(m), depth, layer.filters);
        units.insert(units.end(), mod.begin(), mod.end());
        depth = layer.filters;
      }
      return units;
    }
    case LayerKind::kConcat: return {};
  }
  return {};
}

std::vector<std::pair<std::string, Dims>> unit_arrays(const UnitSpec& u) {
  std::vector<std::pair<std::string, Dims>> out;
  if (u.deconv) {
    out.emplace_back(u.prefix + ".weight", dims({u.in_depth, u.filters, 2, 2}));
  } else {
    out.emplace_back(u.prefix + ".weight", dims({u.filters, u.in_depth, u.kernel, u.kernel}));
  }
  out.emplace_back(u.prefix + ".bias", dims({u.filters}));
  if (u.bn) {
    for (const char* s : {".bn.gamma", ".bn.beta", ".bn.mean", ".bn.var"}) {
      out.emplace_back(u.prefix + s, dims({u.filters}));
    }
  }
  return out;
}

Shape layer_output(const LayerSpec& layer, const std::vector<Shape>& in) {
  const Shape& x = in.front();
  switch (layer.kind) {
    case LayerKind::kConv: return nn::conv_output_shape(x, layer.filters, layer.stride);
    case LayerKind::kDeconv: return Shape{layer.filters, x.height * 2, x.width * 2};
    case LayerKind::kInception:
      if (layer.downsample) return Shape{layer.filters, x.height / 2, x.width / 2};
      return Shape{layer.filters, x.height, x.width};
    case LayerKind::kConcat: {
      Shape s = x;
      for (std::size_t i = 1; i < in.size(); ++i) {
        if (in[i].height != x.height || in[i].width != x.width) {
          throw LayerError(layer.name, "concat inputs " + to_string(x) + " and " + to_string(in[i]));
        }
        s.depth += in[i].depth;
      }
      return s;
    }
  }
  return x;
}

// Walks the graph in order, handing each layer its input shapes.
template <typename Fn>
void walk(const GraphSpec& spec, Fn&& fn) {
  std::unordered_map<std::string, Shape> shapes;
  for (const auto& in : spec.inputs) shapes[in.name] = in.shape;
  for (const auto& layer : spec.layers) {
    std::vector<Shape> in;
    for (const auto& name : layer.inputs) {
      const auto it = shapes.find(name);
      if (it == shapes.end()) throw LayerError(layer.name, "unknown input '" + name + "'");
      in.push_back(it->second);
    }
    if (in.empty()) throw LayerError(layer.name, "no inputs");
    if (layer.kind == LayerKind::kInception && layer.downsample &&
        (in.front().height % 2 != 0 || in.front().width % 2 != 0)) {
      throw LayerError(layer.name, "downsampling needs even spatial dims, got " + to_string(in.front()));
    }
    const Shape out = layer_output(layer, in);
    fn(layer, in, out);
    shapes[layer.name] = out;
  }
}

std::vector<float> take(const ParamStore& store, const std::string& layer, const std::string& name,
                        const Dims& expected) {
  const auto* a = store.find(name);
  if (a == nullptr) throw LayerError(layer, "missing array '" + name + "'");
  if (a->dims != expected) {
    auto fmt = [](const Dims& d) {
      std::string s = "[";
      for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
      return s + "]";
    };
    throw LayerError(layer, "array '" + name + "' has dims " + fmt(a->dims) + ", expected " + fmt(expected));
  }
  return a->values;
}

std::optional<nn::BatchNormParams> take_bn(const ParamStore& store, const std::string& layer, const UnitSpec& u) {
  if (!u.bn) return std::nullopt;
  const Dims d = dims({u.filters});
  return nn::BatchNormParams{take(store, layer, u.prefix + ".bn.gamma", d), take(store, layer, u.prefix + ".bn.beta", d),
                             take(store, layer, u.prefix + ".bn.mean", d), take(store, layer, u.prefix + ".bn.var", d)};
}

nn::ConvUnit take_conv(const ParamStore& store, const std::string& layer, const UnitSpec& u) {
  nn::ConvUnit unit;
  unit.conv.filters = u.filters;
  unit.conv.in_depth = u.in_depth;
  unit.conv.kernel = u.kernel;
  unit.conv.stride = u.stride;
  unit.conv.weight = take(store, layer, u.prefix + ".weight", dims({u.filters, u.in_depth, u.kernel, u.kernel}));
  unit.conv.bias = take(store, layer, u.prefix + ".bias", dims({u.filters}));
  unit.bn = take_bn(store, layer, u);
  return unit;
}

nn::DeconvUnit take_deconv(const ParamStore& store, const std::string& layer, const UnitSpec& u) {
  nn::DeconvUnit unit;
  unit.deconv.filters = u.filters;
  unit.deconv.in_depth = u.in_depth;
  unit.deconv.weight = take(store, layer, u.prefix + ".weight", dims({u.in_depth, u.filters, 2, 2}));
  unit.deconv.bias = take(store, layer, u.prefix + ".bias", dims({u.filters}));
  unit.bn = take_bn(store, layer, u);
  return unit;
}

}  // namespace

std::vector<TraceEntry> shape_trace(const GraphSpec& spec) {
  std::vector<TraceEntry> trace;
  for (const auto& in : spec.inputs) trace.push_back({in.name, in.shape});
  walk(spec, [&](const LayerSpec& layer, const std::vector<Shape>&, const Shape& out) {
    trace.push_back({layer.name, out});
  });
  return trace;
}

std::vector<ArraySpec> required_arrays(const GraphSpec& spec) {
  std::vector<ArraySpec> out;
  walk(spec, [&](const LayerSpec& layer, const std::vector<Shape>& in, const Shape&) {
    for (const auto& unit : layer_units(layer, in.front().depth)) {
      for (auto& [name, d] : unit_arrays(unit)) out.push_back({layer.name, name, d});
    }
  });
  return out;
}

std::vector<std::pair<std::string, std::size_t>> parameter_counts(const GraphSpec& spec) {
  std::vector<std::pair<std::string, std::size_t>> counts;
  for (const auto& layer : spec.layers) counts.emplace_back(layer.name, 0);
  for (const auto& a : required_arrays(spec)) {
    std::size_t n = 1;
    for (auto d : a.dims) n *= d;
    auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return c.first == a.layer; });
    it->second += n;
  }
  return counts;
}

ParamStore random_params(const GraphSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamStore store;
  for (const auto& a : required_arrays(spec)) {
    NamedArray arr{a.dims, std::vector<float>(NamedArray{a.dims, {}}.numel(), 0.0F)};
    const auto ends_with = [&](std::string_view suffix) {
      return a.name.size() >= suffix.size() && a.name.compare(a.name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".weight")) {
      // fan-in: in_depth * k * k for conv, in_depth for the 2x2 deconv footprint.
      const bool deconv = a.dims.size() == 4 && a.dims[2] == 2;
      const double fan_in = deconv ? a.dims[0] : static_cast<double>(a.dims[1]) * a.dims[2] * a.dims[3];
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
      for (auto& v : arr.values) v = static_cast<float>(dist(rng));
    } else if (ends_with(".bn.gamma") || ends_with(".bn.var")) {
      std::fill(arr.values.begin(), arr.values.end(), 1.0F);
    }
    store.put(a.name, std::move(arr));
  }
  return store;
}

Network Network::build(GraphSpec spec, const ParamStore& store) {
  Network net;
  for (const auto& in : spec.inputs) net.input_shapes_.push_back(in.shape);
  walk(spec, [&](const LayerSpec& layer, const std::vector<Shape>& in, const Shape&) {
    const auto units = layer_units(layer, in.front().depth);
    switch (layer.kind) {
      case LayerKind::kConv: net.params_.emplace_back(take_conv(store, layer.name, units.front())); break;
      case LayerKind::kDeconv: net.params_.emplace_back(take_deconv(store, layer.name, units.front())); break;
      case LayerKind::kInception: {
        nn::InceptionBlockParams block;
        block.downsample = layer.downsample;
        for (std::size_t u = 0; u < units.size(); u += 7) {
          block.modules.push_back({take_conv(store, layer.name, units[u]), take_conv(store, layer.name, units[u + 1]),
                                   take_conv(store, layer.name, units[u + 2]), take_conv(store, layer.name, units[u + 3]),
                                   take_conv(store, layer.name, units[u + 4]), take_conv(store, layer.name, units[u + 5]),
                                   take_conv(store, layer.name, units[u + 6])});
        }
        net.params_.emplace_back(std::move(block));
        break;
      }
      case LayerKind::kConcat: net.params_.emplace_back(std::monostate{}); break;
    }
  });
  net.spec_ = std::move(spec);
  return net;
}

std::vector<Tensor> Network::run(std::vector<Tensor> inputs, const Observer& observer) const {
  if (inputs.size() != spec_.inputs.size()) {
    throw Error(ErrorCode::kShapeMismatch, "graph takes " + std::to_string(spec_.inputs.size()) + " inputs");
  }
  std::unordered_map<std::string, Tensor> live;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!(inputs[i].shape() == input_shapes_[i])) {
      throw Error(ErrorCode::kShapeMismatch, "input '" + spec_.inputs[i].name + "' is " +
                                                 to_string(inputs[i].shape()) + ", graph expects " +
                                                 to_string(input_shapes_[i]));
    }
    live[spec_.inputs[i].name] = std::move(inputs[i]);
  }

  // Last consumer of each tensor, so intermediates can be released early.
  std::unordered_map<std::string, std::size_t> last_use;
  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    for (const auto& name : spec_.layers[l].inputs) last_use[name] = l;
  }
  for (const auto& name : spec_.outputs) last_use[name] = spec_.layers.size();

  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    const auto& layer = spec_.layers[l];
    const Tensor& x = live.at(layer.inputs.front());
    Tensor y;
    switch (layer.kind) {
      case LayerKind::kConv: y = nn::apply(x, std::get<nn::ConvUnit>(params_[l])); break;
      case LayerKind::kDeconv: y = nn::apply(x, std::get<nn::DeconvUnit>(params_[l])); break;
      case LayerKind::kInception: y = nn::inception_block(x, std::get<nn::InceptionBlockParams>(params_[l])); break;
      case LayerKind::kConcat: {
        y = x;
        for (std::size_t i = 1; i < layer.inputs.size(); ++i) y = nn::concat_depth(y, live.at(layer.inputs[i]));
        break;
      }
    }
    if (observer) observer(layer.name, y);
    live[layer.name] = std::move(y);
    for (const auto& name : layer.inputs) {
      if (last_use[name] == l) live.erase(name);
    }
  }

  std::vector<Tensor> out;
  for (const auto& name : spec_.outputs) out.push_back(live.at(name));
  return out;
}

}  // namespace mvln
