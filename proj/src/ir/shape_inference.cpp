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

#include "netmorph/shape_inference.hpp"

namespace netmorph {

namespace {

void require_chw(const LayerNode& node, const Shape& input) {
  if (input.size() != 3) {
    throw ShapeError("layer '" + node.name + "' expects a (C,H,W) input, got " +
                     shape_to_string(input));
  }
}

void require_channels(const LayerNode& node, const Shape& input, std::size_t channels) {
  require_chw(node, input);
  if (input[0] != channels) {
    throw ShapeError("channel mismatch at layer '" + node.name + "': expects " +
                     std::to_string(channels) + " channels, input has " +
                     std::to_string(input[0]));
  }
}

std::size_t window_output(const LayerNode& node, std::size_t n, std::size_t k, std::size_t s,
                          std::size_t p) {
  try {
    return conv_output_size(n, k, s, p);
  } catch (const ShapeError& e) {
    throw ShapeError("layer '" + node.name + "': " + e.what());
  }
}

Shape infer_chain(const std::vector<LayerNode>& chain, Shape shape,
                  std::vector<LayerShape>* rows, const std::string& parent);

Shape infer_node(const LayerNode& node, const Shape& input, std::vector<LayerShape>* rows,
                 const std::string& parent) {
  Shape out;
  switch (node.kind()) {
    case LayerKind::kConv2d: {
      const auto& a = node.as<Conv2dAttrs>();
      require_channels(node, input, a.in_channels);
      out = {a.out_channels, window_output(node, input[1], a.kernel_size, a.stride, a.padding),
             window_output(node, input[2], a.kernel_size, a.stride, a.padding)};
      break;
    }
    case LayerKind::kBatchNorm2d:
      require_channels(node, input, node.as<BatchNormAttrs>().channels);
      out = input;
      break;
    case LayerKind::kActivation:
      out = input;
      break;
    case LayerKind::kMaxPool2d: {
      const auto& a = node.as<MaxPoolAttrs>();
      require_chw(node, input);
      out = {input[0], window_output(node, input[1], a.kernel_size, a.stride, 0),
             window_output(node, input[2], a.kernel_size, a.stride, 0)};
      break;
    }
    case LayerKind::kGlobalAvgPool:
      require_chw(node, input);
      out = {input[0]};
      break;
    case LayerKind::kLinear: {
      const auto& a = node.as<LinearAttrs>();
      if (shape_numel(input) != a.in_features) {
        throw ShapeError("feature mismatch at layer '" + node.name + "': expects " +
                         std::to_string(a.in_features) + " features, input has " +
                         shape_to_string(input));
      }
      out = {a.out_features};
      break;
    }
    case LayerKind::kResidualBlock: {
      const auto& r = node.as<ResidualAttrs>();
      Shape main_out = infer_chain(r.main, input, rows, node.name);
      Shape short_out = infer_chain(r.shortcut, input, rows, node.name);
      if (main_out != short_out) {
        throw ShapeError("residual block '" + node.name + "': main path yields " +
                         shape_to_string(main_out) + " but shortcut yields " +
                         shape_to_string(short_out));
      }
      out = main_out;
      break;
    }
  }
  if (rows) rows->push_back({node.name, parent, node.kind(), input, out});
  return out;
}

Shape infer_chain(const std::vector<LayerNode>& chain, Shape shape,
                  std::vector<LayerShape>* rows, const std::string& parent) {
  for (const auto& node : chain) shape = infer_node(node, shape, rows, parent);
  return shape;
}

}  // namespace

std::size_t conv_output_size(std::size_t n, std::size_t kernel, std::size_t stride,
                             std::size_t padding) {
  if (stride == 0) throw ShapeError("stride must be positive");
  if (n + 2 * padding < kernel) {
    throw ShapeError("window " + std::to_string(kernel) + " does not fit extent " +
                     std::to_string(n) + " with padding " + std::to_string(padding));
  }
  return (n + 2 * padding - kernel) / stride + 1;
}

Shape infer_layer_shape(const LayerNode& node, const Shape& input) {
  return infer_node(node, input, nullptr, {});
}

std::vector<LayerShape> infer_shapes(const NetworkSpec& net, const Chw& input_shape) {
  if (!net.layers.empty() && net.layers.front().kind() == LayerKind::kConv2d &&
      net.layers.front().as<Conv2dAttrs>().in_channels != input_shape[0]) {
    throw ShapeError("input has " + std::to_string(input_shape[0]) +
                     " channels but first layer '" + net.layers.front().name + "' expects " +
                     std::to_string(net.layers.front().as<Conv2dAttrs>().in_channels));
  }
  std::vector<LayerShape> rows;
  infer_chain(net.layers, Shape(input_shape.begin(), input_shape.end()), &rows, {});
  return rows;
}

Shape output_shape(const NetworkSpec& net, const Chw& input_shape) {
  return infer_chain(net.layers, Shape(input_shape.begin(), input_shape.end()), nullptr, {});
}

}  // namespace netmorph
