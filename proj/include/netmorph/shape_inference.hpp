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

#ifndef NETMORPH_SHAPE_INFERENCE_HPP_
#define NETMORPH_SHAPE_INFERENCE_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "netmorph/network.hpp"

namespace netmorph {

/// floor((n + 2p - k) / s) + 1; throws ShapeError when the window does not fit.
std::size_t conv_output_size(std::size_t n, std::size_t kernel, std::size_t stride,
                             std::size_t padding);

/// One row per executed node. Residual blocks contribute their sub-layers
/// (with `parent` set to the block name) followed by a row for the block
/// itself, which carries the post-addition output shape.
struct LayerShape {
  std::string name;
  std::string parent;
  LayerKind kind;
  Shape input;
  Shape output;
};

/// Output shape of one node given its input shape (sub-layers not reported).
Shape infer_layer_shape(const LayerNode& node, const Shape& input);

std::vector<LayerShape> infer_shapes(const NetworkSpec& net, const Chw& input_shape);
inline std::vector<LayerShape> infer_shapes(const NetworkSpec& net) {
  return infer_shapes(net, net.input_shape);
}

Shape output_shape(const NetworkSpec& net, const Chw& input_shape);

}  // namespace netmorph

#endif  // NETMORPH_SHAPE_INFERENCE_HPP_
