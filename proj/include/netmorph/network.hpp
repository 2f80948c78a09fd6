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

#ifndef NETMORPH_NETWORK_HPP_
#define NETMORPH_NETWORK_HPP_

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "netmorph/tensor.hpp"

namespace netmorph {

/// Thrown when a network description violates the schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LayerKind {
  kConv2d,
  kBatchNorm2d,
  kActivation,
  kMaxPool2d,
  kGlobalAvgPool,
  kLinear,
  kResidualBlock,
};

std::string_view layer_kind_name(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view name);

enum class ActivationMode { kRelu, kPrelu };

std::string_view activation_mode_name(ActivationMode mode);

struct Conv2dAttrs {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_size = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool has_bias = false;
  bool operator==(const Conv2dAttrs&) const = default;
};

struct BatchNormAttrs {
  std::size_t channels = 0;
  double epsilon = 1e-5;
  bool operator==(const BatchNormAttrs&) const = default;
};

struct ActivationAttrs {
  ActivationMode mode = ActivationMode::kRelu;
  bool operator==(const ActivationAttrs&) const = default;
};

struct MaxPoolAttrs {
  std::size_t kernel_size = 2;
  std::size_t stride = 2;
  bool operator==(const MaxPoolAttrs&) const = default;
};

struct GlobalAvgPoolAttrs {
  bool operator==(const GlobalAvgPoolAttrs&) const = default;
};

struct LinearAttrs {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  bool operator==(const LinearAttrs&) const = default;
};

struct LayerNode;

/// Main path and (possibly empty) shortcut, summed elementwise and passed
/// through a ReLU.
struct ResidualAttrs {
  std::vector<LayerNode> main;
  std::vector<LayerNode> shortcut;
  bool operator==(const ResidualAttrs&) const;
};

using LayerAttrs = std::variant<Conv2dAttrs, BatchNormAttrs, ActivationAttrs, MaxPoolAttrs,
                                GlobalAvgPoolAttrs, LinearAttrs, ResidualAttrs>;

struct LayerNode {
  std::string name;
  LayerAttrs attrs;

  LayerKind kind() const { return static_cast<LayerKind>(attrs.index()); }

  template <typename T>
  const T& as() const { return std::get<T>(attrs); }
  template <typename T>
  T& as() { return std::get<T>(attrs); }

  /// Parameter names this node reads from a WeightsStore (not recursive).
  std::vector<std::string> param_refs() const;

  bool operator==(const LayerNode&) const = default;
};

inline bool ResidualAttrs::operator==(const ResidualAttrs& o) const {
  return main == o.main && shortcut == o.shortcut;
}

// Parameter naming convention, shared by the engine and the rewrites.
std::string conv_weight_name(std::string_view layer);
std::string conv_bias_name(std::string_view layer);
std::string bn_gamma_name(std::string_view layer);
std::string bn_beta_name(std::string_view layer);
std::string bn_mean_name(std::string_view layer);
std::string bn_var_name(std::string_view layer);
std::string prelu_slope_name(std::string_view layer);
std::string linear_weight_name(std::string_view layer);
std::string linear_bias_name(std::string_view layer);

/// Expected shape of every parameter referenced by `node`.
std::vector<std::pair<std::string, Shape>> expected_params(const LayerNode& node);

using Chw = std::array<std::size_t, 3>;

struct NetworkSpec {
  Chw input_shape{0, 0, 0};
  std::vector<LayerNode> layers;
  std::map<std::string, std::string> metadata;

  bool operator==(const NetworkSpec&) const = default;
};

using WeightsStore = std::map<std::string, Tensor>;

/// Visits every node depth-first in execution order (residual blocks first,
/// then their main path, then their shortcut).
void for_each_layer(const std::vector<LayerNode>& layers,
                    const std::function<void(const LayerNode&)>& fn);

/// Finds a node anywhere in the tree; nullptr when absent.
const LayerNode* find_layer(const NetworkSpec& net, std::string_view name);

/// Every parameter name referenced by the network, in execution order.
std::vector<std::string> all_param_refs(const NetworkSpec& net);

/// Checks name uniqueness, attribute ranges and shape inference end to end.
/// Throws SchemaError or ShapeError.
void validate(const NetworkSpec& net);

/// Checks that `weights` holds every parameter with the expected shape.
/// Throws SchemaError naming the first offending parameter.
void validate_weights(const NetworkSpec& net, const WeightsStore& weights);

}  // namespace netmorph

#endif  // NETMORPH_NETWORK_HPP_
