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

#ifndef NETMORPH_VERIFY_HPP_
#define NETMORPH_VERIFY_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "netmorph/flops.hpp"
#include "netmorph/network.hpp"
#include "netmorph/shape_inference.hpp"

namespace netmorph {

enum class VerifyMode {
  /// Identical input shapes; compares only positions whose computation reads
  /// no zero padding in either network.
  kExactInterior,
  /// Compares whole activations. When the input shapes differ by an integer
  /// factor, network A sees the box-downsampled version of B's input and
  /// the result is informational only.
  kStatistical,
};

VerifyMode parse_verify_mode(std::string_view name);
std::string_view verify_mode_name(VerifyMode mode);

struct Tolerance {
  double abs = 1e-8;
  double rel = 1e-8;

  static Tolerance defaults_for(DType dtype) {
    return dtype == DType::kF32 ? Tolerance{1e-4, 1e-4} : Tolerance{1e-8, 1e-8};
  }
};

struct VerifyOptions {
  std::size_t samples = 16;
  std::uint64_t seed = 0;
  std::optional<Tolerance> tolerance;  // defaults by dtype
  VerifyMode mode = VerifyMode::kExactInterior;
  std::string compare_layer;           // empty: final output
  std::optional<DType> input_dtype;    // default: f64 if any weight is f64
};

struct PreservationReport {
  VerifyMode mode = VerifyMode::kExactInterior;
  std::size_t samples = 0;
  std::string compared_layer;  // "" for the final output
  std::size_t compared_elements = 0;
  std::size_t total_elements = 0;
  double max_abs_diff = 0.0;
  double max_rel_diff = 0.0;  // max_abs_diff / max |reference|
  Tolerance tolerance;
  DType dtype = DType::kF64;
  Chw input_shape_a{};
  Chw input_shape_b{};
  std::vector<LayerShape> shapes_a;
  std::vector<LayerShape> shapes_b;
  bool asserted = true;  // false for informational (differing-resolution) runs
  bool pass = false;     // max_abs_diff <= tol.abs || max_rel_diff <= tol.rel
};

PreservationReport verify_function_preservation(const NetworkSpec& net_a,
                                                const WeightsStore& weights_a,
                                                const NetworkSpec& net_b,
                                                const WeightsStore& weights_b,
                                                const VerifyOptions& options = {});

/// Per-axis mask of output positions that are computed without reading any
/// zero padding. Non-spatial outputs yield a single flag in `rows`.
struct PaddingFreeMask {
  std::vector<bool> rows;
  std::vector<bool> cols;
  bool spatial = true;
};

PaddingFreeMask padding_free_mask(const NetworkSpec& net, const Chw& input_shape,
                                  std::string_view upto_layer = {});

struct ShapeRow {
  std::string name;
  std::optional<Shape> shape_a;
  std::optional<Shape> shape_b;
  bool equal = false;
};

struct ShapeCheck {
  bool pass = false;
  std::vector<ShapeRow> rows;
};

/// Compares per-layer output shapes from `from_layer` (a node or a residual
/// block) to the end. Throws SchemaError if `from_layer` is missing in either.
ShapeCheck verify_shape_preservation(const NetworkSpec& net_a, const Chw& shape_a,
                                     const NetworkSpec& net_b, const Chw& shape_b,
                                     std::string_view from_layer);

struct FlopsRow {
  std::string name;
  std::optional<LayerCost> cost_a;
  std::optional<LayerCost> cost_b;
  bool equal = false;  // MACs and activation sizes match
};

struct FlopsCheck {
  bool pass = false;
  std::vector<FlopsRow> rows;
};

FlopsCheck verify_flops_preservation(const NetworkSpec& net_a, const Chw& shape_a,
                                     const NetworkSpec& net_b, const Chw& shape_b,
                                     std::string_view from_layer);

nlohmann::json to_json(const PreservationReport& report);
nlohmann::json to_json(const ShapeCheck& check);
nlohmann::json to_json(const FlopsCheck& check);
nlohmann::json to_json(const FlopsReport& report);
nlohmann::json to_json(const std::vector<LayerShape>& shapes);

}  // namespace netmorph

#endif  // NETMORPH_VERIFY_HPP_
