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

#ifndef NETMORPH_IO_HPP_
#define NETMORPH_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "netmorph/network.hpp"

namespace netmorph {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Weights container layout (all integers little-endian):
//   8 bytes  magic "NETMWTS\0"
//   1 byte   version (1)
//   8 bytes  manifest length M
//   M bytes  compact JSON manifest {name: {dtype, shape, offset, length}}
//   blob     tensors in manifest (name) order; f32 as 4 bytes, f64 as 8
inline constexpr char kWeightsMagic[8] = {'N', 'E', 'T', 'M', 'W', 'T', 'S', '\0'};
inline constexpr std::uint8_t kWeightsVersion = 1;

std::vector<std::uint8_t> encode_weights(const WeightsStore& weights);
/// Throws FormatError on bad magic, unknown version, or an inconsistent
/// manifest (out-of-bounds, overlapping or mis-sized entries).
WeightsStore decode_weights(const std::vector<std::uint8_t>& bytes);

void write_weights(const std::filesystem::path& path, const WeightsStore& weights);
WeightsStore read_weights(const std::filesystem::path& path);

/// A model on disk is <base>.json (network) plus <base>.weights.
struct Model {
  NetworkSpec net;
  WeightsStore weights;
};

std::filesystem::path spec_path(const std::filesystem::path& base);
std::filesystem::path weights_path(const std::filesystem::path& base);
Model load_model(const std::filesystem::path& base);
/// Validates the pair before writing anything.
void save_model(const std::filesystem::path& base, const Model& model);

// ---------------------------------------------------------------------------
// Templates

/// conv1(3->64, 7, s2, p3) bn1 relu maxpool(3, s2), four stages of two basic
/// residual blocks (64, 128, 256, 512), global pool, fc(512 -> classes).
/// Input (3, 224, 224).
NetworkSpec resnet18_like(std::size_t classes = 2);

/// conv1(3->32, 7, s2, p3, bias) bn1 relu1 conv2(32->32, 3, p1) bn2 relu2
/// conv3(32->classes, 1, bias). Input (3, 64, 64).
NetworkSpec tiny_conv(std::size_t classes = 2);

/// "resnet18-like" or "tiny-conv"; throws std::invalid_argument otherwise.
NetworkSpec make_template(std::string_view name, std::size_t classes);

/// Seeded Gaussian weights: conv/linear N(0, 2/fan_in) except the last
/// Linear layer (zeros), conv biases N(0, 0.01), batchnorm statistics
/// perturbed around identity, PReLU slopes 0.25. Deterministic per seed.
WeightsStore init_weights(const NetworkSpec& net, std::uint64_t seed, DType dtype = DType::kF32);

/// Top-level prefix of `net` up to and including `layer`.
NetworkSpec truncate_after(const NetworkSpec& net, std::string_view layer);

}  // namespace netmorph

#endif  // NETMORPH_IO_HPP_
