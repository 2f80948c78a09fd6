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

#include "netmorph/flops.hpp"

#include "netmorph/shape_inference.hpp"

namespace netmorph {

FlopsReport count_flops(const NetworkSpec& net, const Chw& input_shape) {
  const auto shapes = infer_shapes(net, input_shape);

  FlopsReport report;
  report.per_layer.reserve(shapes.size());
  for (const auto& row : shapes) {
    const LayerNode* node = find_layer(net, row.name);
    LayerCost cost;
    cost.name = row.name;
    cost.parent = row.parent;
    cost.kind = row.kind;
    cost.activation_elems = shape_numel(row.output);
    for (const auto& [name, shape] : expected_params(*node)) cost.param_elems += shape_numel(shape);

    switch (row.kind) {
      case LayerKind::kConv2d: {
        const auto& a = node->as<Conv2dAttrs>();
        cost.macs = static_cast<std::uint64_t>(a.out_channels) * a.in_channels * a.kernel_size *
                    a.kernel_size * row.output[1] * row.output[2];
        if (a.has_bias) cost.elementwise_ops = cost.activation_elems;
        break;
      }
      case LayerKind::kLinear: {
        const auto& a = node->as<LinearAttrs>();
        cost.macs = static_cast<std::uint64_t>(a.in_features) * a.out_features;
        cost.elementwise_ops = a.out_features;
        break;
      }
      case LayerKind::kBatchNorm2d:
      case LayerKind::kActivation:
        cost.elementwise_ops = cost.activation_elems;
        break;
      case LayerKind::kMaxPool2d: {
        const auto k = node->as<MaxPoolAttrs>().kernel_size;
        cost.elementwise_ops = cost.activation_elems * k * k;
        break;
      }
      case LayerKind::kGlobalAvgPool:
        cost.elementwise_ops = shape_numel(row.input);
        break;
      case LayerKind::kResidualBlock:
        // addition + ReLU
        cost.elementwise_ops = 2 * cost.activation_elems;
        break;
    }
    report.total_macs += cost.macs;
    report.total_elementwise_ops += cost.elementwise_ops;
    report.total_activation_elems += cost.activation_elems;
    report.total_param_elems += cost.param_elems;
    report.per_layer.push_back(std::move(cost));
  }
  return report;
}

}  // namespace netmorph
