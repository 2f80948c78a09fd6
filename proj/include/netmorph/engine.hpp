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

#ifndef NETMORPH_ENGINE_HPP_
#define NETMORPH_ENGINE_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "netmorph/network.hpp"
#include "netmorph/tensor.hpp"

// Reference forward inference. Every op accumulates in double and rounds
// once to the input's dtype when storing the result. Reduction order inside
// each output element is fixed, so results are bit-reproducible.

namespace netmorph {

struct ConvParams {
  Tensor kernel;               // (C_out, C_in, K, K)
  std::optional<Tensor> bias;  // (C_out)
};

struct BatchNormParams {
  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;
  double epsilon = 1e-5;

  std::size_t channels() const { return gamma.size(); }
};

struct ActivationParams {
  std::optional<double> slope;  // PReLU negative-side slope; absent for ReLU
};

/// Cross-correlation with zero padding:
///   out[o, y, x] = bias[o] + sum_{i,u,v} in_pad[i, y*s+u, x*s+v] * kernel[o, i, u, v]
Tensor conv2d(const Tensor& input, const ConvParams& params, std::size_t stride,
              std::size_t padding);

/// Windowed maximum without padding.
Tensor maxpool2d(const Tensor& input, std::size_t kernel, std::size_t stride);

/// y = gamma * (x - mean) / sqrt(var + eps) + beta, per channel.
Tensor batchnorm_infer(const Tensor& input, const BatchNormParams& params);

Tensor activation(const Tensor& input, ActivationMode mode, double slope = 0.0);

/// (C, H, W) -> (C)
Tensor global_avg_pool(const Tensor& input);

/// weight (out, in), bias (out); input is flattened.
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Elementwise sum; shapes must match.
Tensor add(const Tensor& a, const Tensor& b);

// Parameter lookup by the naming convention in network.hpp. Missing or
// mis-shaped parameters raise SchemaError naming the parameter.
ConvParams conv_params(const LayerNode& node, const WeightsStore& weights);
BatchNormParams batchnorm_params(const LayerNode& node, const WeightsStore& weights);
ActivationParams activation_params(const LayerNode& node, const WeightsStore& weights);

/// Applies one node (recursing into residual blocks).
Tensor apply_layer(const LayerNode& node, const WeightsStore& weights, const Tensor& input);

/// Runs the whole network. The input must match net.input_shape unless
/// `check_input_shape` is false (used to evaluate at other resolutions).
Tensor forward(const NetworkSpec& net, const WeightsStore& weights, const Tensor& input,
               bool check_input_shape = true);

struct ForwardTrace {
  Tensor output;
  std::optional<Tensor> captured;
};

/// As forward(), additionally returning the output of the node named
/// `capture` (which may live inside a residual block).
ForwardTrace forward_capture(const NetworkSpec& net, const WeightsStore& weights,
                             const Tensor& input, std::string_view capture,
                             bool check_input_shape = true);

/// Spatial composition of two kernels: applying `first` then `second`
/// (both stride 1, unpadded) equals applying the returned kernel once.
///   out[o, i, p, q] = sum_{m,a,b} second[o, m, a, b] * first[m, i, p - a, q - b]
/// first: (C_mid, C_in, K1, K1), second: (C_out, C_mid, K2, K2)
/// -> (C_out, C_in, K1 + K2 - 1, K1 + K2 - 1)
Tensor compose_kernels(const Tensor& first, const Tensor& second);

}  // namespace netmorph

#endif  // NETMORPH_ENGINE_HPP_
