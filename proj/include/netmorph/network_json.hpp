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

#ifndef NETMORPH_NETWORK_JSON_HPP_
#define NETMORPH_NETWORK_JSON_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include "netmorph/network.hpp"

namespace netmorph {

// Network description document:
//
//   {
//     "input_shape": [C, H, W],
//     "layers": [ {"name": ..., "kind": "Conv2d", "in_channels": ..., ...}, ... ],
//     "metadata": {"key": "value", ...}
//   }
//
// Attribute keys per kind:
//   Conv2d        in_channels out_channels kernel_size stride padding has_bias
//   BatchNorm2d   channels epsilon
//   Activation    mode ("relu" | "prelu")
//   MaxPool2d     kernel_size stride
//   GlobalAvgPool (none)
//   Linear        in_features out_features
//   ResidualBlock main shortcut (arrays of layer objects)
//
// All listed keys are required; unknown keys are rejected.

/// Parses and validates a description. Throws SchemaError or ShapeError.
NetworkSpec parse_network(std::string_view text);

/// Pretty-printed, key-ordered JSON; parse_network inverts it exactly.
std::string serialize_network(const NetworkSpec& net);

NetworkSpec load_network(const std::filesystem::path& path);
void save_network(const NetworkSpec& net, const std::filesystem::path& path);

}  // namespace netmorph

#endif  // NETMORPH_NETWORK_JSON_HPP_
