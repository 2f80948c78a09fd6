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

#include <cmath>
#include <stdexcept>

#include "netmorph/io.hpp"

namespace netmorph {

namespace {

LayerNode conv(std::string name, std::size_t in, std::size_t out, std::size_t k,
               std::size_t stride, std::size_t padding, bool bias = false) {
  return {std::move(name), Conv2dAttrs{in, out, k, stride, padding, bias}};
}

LayerNode bn(std::string name, std::size_t channels) {
  return {std::move(name), BatchNormAttrs{channels, 1e-5}};
}

LayerNode relu(std::string name) { return {std::move(name), ActivationAttrs{}}; }

LayerNode basic_block(const std::string& name, std::size_t in, std::size_t out,
                      std::size_t stride) {
  ResidualAttrs r;
  r.main = {conv(name + "_conv1", in, out, 3, stride, 1), bn(name + "_bn1", out),
            relu(name + "_relu"), conv(name + "_conv2", out, out, 3, 1, 1),
            bn(name + "_bn2", out)};
  if (stride != 1 || in != out) {
    r.shortcut = {conv(name + "_down_conv", in, out, 1, stride, 0), bn(name + "_down_bn", out)};
  }
  return {name, std::move(r)};
}

}  // namespace

NetworkSpec resnet18_like(std::size_t classes) {
  NetworkSpec net;
  net.input_shape = {3, 224, 224};
  net.layers = {conv("conv1", 3, 64, 7, 2, 3), bn("bn1", 64), relu("relu"),
                {"maxpool", MaxPoolAttrs{3, 2}}};
  std::size_t in = 64;
  const std::size_t widths[] = {64, 128, 256, 512};
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t b = 0; b < 2; ++b) {
      const std::string name = "layer" + std::to_string(s + 1) + "_" + std::to_string(b);
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      net.layers.push_back(basic_block(name, in, widths[s], stride));
      in = widths[s];
    }
  }
  net.layers.push_back({"avgpool", GlobalAvgPoolAttrs{}});
  net.layers.push_back({"fc", LinearAttrs{512, classes}});
  validate(net);
  return net;
}

NetworkSpec tiny_conv(std::size_t classes) {
  NetworkSpec net;
  net.input_shape = {3, 64, 64};
  net.layers = {conv("conv1", 3, 32, 7, 2, 3, true), bn("bn1", 32), relu("relu1"),
                conv("conv2", 32, 32, 3, 1, 1),      bn("bn2", 32), relu("relu2"),
                conv("conv3", 32, classes, 1, 1, 0, true)};
  validate(net);
  return net;
}

NetworkSpec make_template(std::string_view name, std::size_t classes) {
  if (classes == 0) throw std::invalid_argument("classes must be positive");
  if (name == "resnet18-like") return resnet18_like(classes);
  if (name == "tiny-conv") return tiny_conv(classes);
  throw std::invalid_argument("unknown template '" + std::string(name) +
                              "' (expected resnet18-like or tiny-conv)");
}

WeightsStore init_weights(const NetworkSpec& net, std::uint64_t seed, DType dtype) {
  std::string last_linear;
  for_each_layer(net.layers, [&](const LayerNode& n) {
    if (n.kind() == LayerKind::kLinear) last_linear = n.name;
  });

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  WeightsStore out;
  for_each_layer(net.layers, [&](const LayerNode& node) {
    for (const auto& [name, shape] : expected_params(node)) {
      std::vector<double> v(shape_numel(shape));
      if (node.kind() == LayerKind::kLinear && node.name == last_linear) {
        // zero head
      } else if (name == conv_weight_name(node.name) || name == linear_weight_name(node.name)) {
        const double fan_in = static_cast<double>(v.size() / shape[0]);
        const double sd = std::sqrt(2.0 / fan_in);
        for (auto& x : v) x = sd * normal(rng);
      } else if (name == conv_bias_name(node.name) || name == linear_bias_name(node.name) ||
                 name == bn_beta_name(node.name) || name == bn_mean_name(node.name)) {
        for (auto& x : v) x = 0.1 * normal(rng);
      } else if (name == bn_gamma_name(node.name)) {
        for (auto& x : v) x = 1.0 + 0.1 * normal(rng);
      } else if (name == bn_var_name(node.name)) {
        for (auto& x : v) x = 1.0 + 0.1 * std::abs(normal(rng));
      } else if (name == prelu_slope_name(node.name)) {
        for (auto& x : v) x = 0.25;
      }
      out.emplace(name, Tensor(shape, std::move(v), dtype));
    }
  });
  return out;
}

NetworkSpec truncate_after(const NetworkSpec& net, std::string_view layer) {
  NetworkSpec out = net;
  out.layers.clear();
  for (const auto& node : net.layers) {
    out.layers.push_back(node);
    if (node.name == layer) return out;
  }
  throw SchemaError("no top-level layer named '" + std::string(layer) + "'");
}

}  // namespace netmorph
