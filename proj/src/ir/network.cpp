// Copyright 2026 The netmorph Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "netmorph/network.hpp"

#include <set>

#include "netmorph/shape_inference.hpp"

namespace netmorph {

namespace {

constexpr std::array<std::string_view, 7> kKindNames = {
    "Conv2d", "BatchNorm2d", "Activation", "MaxPool2d", "GlobalAvgPool", "Linear", "ResidualBlock"};

std::string join(std::string_view layer, std::string_view suffix) {
  std::string s(layer);
  s += '.';
  s += suffix;
  return s;
}

void check_positive(std::size_t v, const LayerNode& node, std::string_view field) {
  if (v == 0) {
    throw SchemaError("layer '" + node.name + "': field '" + std::string(field) +
                      "' must be positive");
  }
}

void validate_attrs(const LayerNode& node, bool nested) {
  switch (node.kind()) {
    case LayerKind::kConv2d: {
      const auto& a = node.as<Conv2dAttrs>();
      check_positive(a.in_channels, node, "in_channels");
      check_positive(a.out_channels, node, "out_channels");
      check_positive(a.kernel_size, node, "kernel_size");
      check_positive(a.stride, node, "stride");
      break;
    }
    case LayerKind::kBatchNorm2d: {
      const auto& a = node.as<BatchNormAttrs>();
      check_positive(a.channels, node, "channels");
      if (!(a.epsilon > 0.0)) {
        throw SchemaError("layer '" + node.name + "': field 'epsilon' must be positive");
      }
      break;
    }
    case LayerKind::kMaxPool2d: {
      const auto& a = node.as<MaxPoolAttrs>();
      check_positive(a.kernel_size, node, "kernel_size");
      check_positive(a.stride, node, "stride");
      break;
    }
    case LayerKind::kLinear: {
      const auto& a = node.as<LinearAttrs>();
      check_positive(a.in_features, node, "in_features");
      check_positive(a.out_features, node, "out_features");
      break;
    }
    case LayerKind::kResidualBlock: {
      if (nested) {
        throw SchemaError("layer '" + node.name + "': residual blocks cannot be nested");
      }
      const auto& r = node.as<ResidualAttrs>();
      if (r.main.empty()) {
        throw SchemaError("layer '" + node.name + "': field 'main' must not be empty");
      }
      for (const auto& sub : r.main) validate_attrs(sub, true);
      for (const auto& sub : r.shortcut) validate_attrs(sub, true);
      break;
    }
    case LayerKind::kActivation:
    case LayerKind::kGlobalAvgPool:
      break;
  }
}

void for_each_impl(const std::vector<LayerNode>& layers,
                   const std::function<void(const LayerNode&)>& fn) {
  for (const auto& node : layers) {
    fn(node);
    if (node.kind() == LayerKind::kResidualBlock) {
      const auto& r = node.as<ResidualAttrs>();
      for_each_impl(r.main, fn);
      for_each_impl(r.shortcut, fn);
    }
  }
}

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<LayerKind>(i);
  }
  return std::nullopt;
}

std::string_view activation_mode_name(ActivationMode mode) {
  return mode == ActivationMode::kRelu ? "relu" : "prelu";
}

std::string conv_weight_name(std::string_view layer) { return join(layer, "weight"); }
std::string conv_bias_name(std::string_view layer) { return join(layer, "bias"); }
std::string bn_gamma_name(std::string_view layer) { return join(layer, "gamma"); }
std::string bn_beta_name(std::string_view layer) { return join(layer, "beta"); }
std::string bn_mean_name(std::string_view layer) { return join(layer, "running_mean"); }
std::string bn_var_name(std::string_view layer) { return join(layer, "running_var"); }
std::string prelu_slope_name(std::string_view layer) { return join(layer, "slope"); }
std::string linear_weight_name(std::string_view layer) { return join(layer, "weight"); }
std::string linear_bias_name(std::string_view layer) { return join(layer, "bias"); }

std::vector<std::pair<std::string, Shape>> expected_params(const LayerNode& node) {
  std::vector<std::pair<std::string, Shape>> out;
  switch (node.kind()) {
    case LayerKind::kConv2d: {
      const auto& a = node.as<Conv2dAttrs>();
      out.emplace_back(conv_weight_name(node.name),
                       Shape{a.out_channels, a.in_channels, a.kernel_size, a.kernel_size});
      if (a.has_bias) out.emplace_back(conv_bias_name(node.name), Shape{a.out_channels});
      break;
    }
    case LayerKind::kBatchNorm2d: {
      const Shape c{node.as<BatchNormAttrs>().channels};
      out.emplace_back(bn_gamma_name(node.name), c);
      out.emplace_back(bn_beta_name(node.name), c);
      out.emplace_back(bn_mean_name(node.name), c);
      out.emplace_back(bn_var_name(node.name), c);
      break;
    }
    case LayerKind::kActivation:
      if (node.as<ActivationAttrs>().mode == ActivationMode::kPrelu) {
        out.emplace_back(prelu_slope_name(node.name), Shape{1});
      }
      break;
    case LayerKind::kLinear: {
      const auto& a = node.as<LinearAttrs>();
      out.emplace_back(linear_weight_name(node.name), Shape{a.out_features, a.in_features});
      out.emplace_back(linear_bias_name(node.name), Shape{a.out_features});
      break;
    }
    case LayerKind::kMaxPool2d:
    case LayerKind::kGlobalAvgPool:
    case LayerKind::kResidualBlock:
      break;
  }
  return out;
}

std::vector<std::string> LayerNode::param_refs() const {
  std::vector<std::string> names;
  for (auto& [name, shape] : expected_params(*this)) names.push_back(name);
  return names;
}

void for_each_layer(const std::vector<LayerNode>& layers,
                    const std::function<void(const LayerNode&)>& fn) {
  for_each_impl(layers, fn);
}

const LayerNode* find_layer(const NetworkSpec& net, std::string_view name) {
  const LayerNode* found = nullptr;
  for_each_layer(net.layers, [&](const LayerNode& node) {
    if (!found && node.name == name) found = &node;
  });
  return found;
}

std::vector<std::string> all_param_refs(const NetworkSpec& net) {
  std::vector<std::string> names;
  for_each_layer(net.layers, [&](const LayerNode& node) {
    for (auto& n : node.param_refs()) names.push_back(std::move(n));
  });
  return names;
}

void validate(const NetworkSpec& net) {
  for (std::size_t i = 0; i < 3; ++i) {
    if (net.input_shape[i] == 0) {
      throw SchemaError("field 'input_shape' must hold three positive integers");
    }
  }
  std::set<std::string> names;
  for_each_layer(net.layers, [&](const LayerNode& node) {
    if (node.name.empty()) throw SchemaError("field 'name' must not be empty");
    if (!names.insert(node.name).second) {
      throw SchemaError("duplicate layer name '" + node.name + "'");
    }
  });
  for (const auto& node : net.layers) validate_attrs(node, false);
  infer_shapes(net, net.input_shape);
}

void validate_weights(const NetworkSpec& net, const WeightsStore& weights) {
  for_each_layer(net.layers, [&](const LayerNode& node) {
    for (const auto& [name, shape] : expected_params(node)) {
      auto it = weights.find(name);
      if (it == weights.end()) {
        throw SchemaError("missing parameter '" + name + "' for layer '" + node.name + "'");
      }
      if (it->second.shape() != shape) {
        throw SchemaError("parameter '" + name + "' has shape " +
                          shape_to_string(it->second.shape()) + ", expected " +
                          shape_to_string(shape));
      }
    }
  });
}

}  // namespace netmorph
