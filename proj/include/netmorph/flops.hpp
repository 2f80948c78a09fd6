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

#ifndef NETMORPH_FLOPS_HPP_
#define NETMORPH_FLOPS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "netmorph/network.hpp"

namespace netmorph {

// Units: one MAC is one multiply plus one add. Elementwise ops (batchnorm,
// activation, pooling comparisons, residual addition) are counted in their
// own column, one per element touched.
inline constexpr const char* kFlopsUnit = "MAC (1 multiply + 1 add)";

struct LayerCost {
  std::string name;
  std::string parent;
  LayerKind kind;
  std::uint64_t macs = 0;
  std::uint64_t elementwise_ops = 0;
  std::uint64_t activation_elems = 0;
  std::uint64_t param_elems = 0;
};

struct FlopsReport {
  std::vector<LayerCost> per_layer;
  std::uint64_t total_macs = 0;
  std::uint64_t total_elementwise_ops = 0;
  std::uint64_t total_activation_elems = 0;
  std::uint64_t total_param_elems = 0;
};

/// Rows follow infer_shapes ordering. Conv2d MACs are C_out*C_in*K^2*H_out*W_out.
FlopsReport count_flops(const NetworkSpec& net, const Chw& input_shape);
inline FlopsReport count_flops(const NetworkSpec& net) {
  return count_flops(net, net.input_shape);
}

}  // namespace netmorph

#endif  // NETMORPH_FLOPS_HPP_
