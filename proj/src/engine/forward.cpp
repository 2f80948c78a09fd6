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

#include "netmorph/engine.hpp"

namespace netmorph {

namespace {

const Tensor& fetch(const WeightsStore& weights, const std::string& name, const Shape& shape,
                    const LayerNode& node) {
  auto it = weights.find(name);
  if (it == weights.end()) {
    throw SchemaError("missing parameter '" + name + "' for layer '" + node.name + "'");
  }
  if (it->second.shape() != shape) {
    throw SchemaError("parameter '" + name + "' has shape " +
                      shape_to_string(it->second.shape()) + ", expected " +
                      shape_to_string(shape));
  }
  return it->second;
}

struct Runner {
  const WeightsStore& weights;
  std::string_view capture;
  std::optional<Tensor> captured;

  Tensor chain(const std::vector<LayerNode>& layers, Tensor x) {
    for (const auto& node : layers) x = node_out(node, x);
    return x;
  }

  Tensor node_out(const LayerNode& node, const Tensor& x) {
    Tensor y;
    if (node.kind() == LayerKind::kResidualBlock) {
      const auto& r = node.as<ResidualAttrs>();
      Tensor main = chain(r.main, x);
      Tensor shortcut = r.shortcut.empty() ? x : chain(r.shortcut, x);
      y = activation(add(main, shortcut), ActivationMode::kRelu);
    } else {
      y = apply_layer(node, weights, x);
    }
    if (!capture.empty() && node.name == capture) captured = y;
    return y;
  }
};

}  // namespace

ConvParams conv_params(const LayerNode& node, const WeightsStore& weights) {
  const auto& a = node.as<Conv2dAttrs>();
  ConvParams p;
  p.kernel = fetch(weights, conv_weight_name(node.name),
                   {a.out_channels, a.in_channels, a.kernel_size, a.kernel_size}, node);
  if (a.has_bias) p.bias = fetch(weights, conv_bias_name(node.name), {a.out_channels}, node);
  return p;
}

BatchNormParams batchnorm_params(const LayerNode& node, const WeightsStore& weights) {
  const auto& a = node.as<BatchNormAttrs>();
  const Shape c{a.channels};
  return BatchNormParams{fetch(weights, bn_gamma_name(node.name), c, node),
                         fetch(weights, bn_beta_name(node.name), c, node),
                         fetch(weights, bn_mean_name(node.name), c, node),
                         fetch(weights, bn_var_name(node.name), c, node), a.epsilon};
}

ActivationParams activation_params(const LayerNode& node, const WeightsStore& weights) {
  if (node.as<ActivationAttrs>().mode == ActivationMode::kRelu) return {};
  return ActivationParams{fetch(weights, prelu_slope_name(node.name), {1}, node)[0]};
}

Tensor apply_layer(const LayerNode& node, const WeightsStore& weights, const Tensor& input) {
  switch (node.kind()) {
    case LayerKind::kConv2d: {
      const auto& a = node.as<Conv2dAttrs>();
      return conv2d(input, conv_params(node, weights), a.stride, a.padding);
    }
    case LayerKind::kBatchNorm2d:
      return batchnorm_infer(input, batchnorm_params(node, weights));
    case LayerKind::kActivation: {
      const auto p = activation_params(node, weights);
      return activation(input, node.as<ActivationAttrs>().mode, p.slope.value_or(0.0));
    }
    case LayerKind::kMaxPool2d: {
      const auto& a = node.as<MaxPoolAttrs>();
      return maxpool2d(input, a.kernel_size, a.stride);
    }
    case LayerKind::kGlobalAvgPool:
      return global_avg_pool(input);
    case LayerKind::kLinear: {
      const auto& a = node.as<LinearAttrs>();
      return linear(input, fetch(weights, linear_weight_name(node.name),
                                 {a.out_features, a.in_features}, node),
                    fetch(weights, linear_bias_name(node.name), {a.out_features}, node));
    }
    case LayerKind::kResidualBlock: {
      Runner runner{weights, {}, std::nullopt};
      return runner.node_out(node, input);
    }
  }
  throw std::logic_error("unhandled layer kind");
}

ForwardTrace forward_capture(const NetworkSpec& net, const WeightsStore& weights,
                             const Tensor& input, std::string_view capture,
                             bool check_input_shape) {
  if (check_input_shape &&
      input.shape() != Shape(net.input_shape.begin(), net.input_shape.end())) {
    throw ShapeError("input shape " + shape_to_string(input.shape()) +
                     " does not match declared " +
                     shape_to_string(Shape(net.input_shape.begin(), net.input_shape.end())));
  }
  Runner runner{weights, capture, std::nullopt};
  Tensor out = runner.chain(net.layers, input);
  return ForwardTrace{std::move(out), std::move(runner.captured)};
}

Tensor forward(const NetworkSpec& net, const WeightsStore& weights, const Tensor& input,
               bool check_input_shape) {
  return forward_capture(net, weights, input, {}, check_input_shape).output;
}

}  // namespace netmorph
