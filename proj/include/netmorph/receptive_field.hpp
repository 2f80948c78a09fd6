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

#ifndef NETMORPH_RECEPTIVE_FIELD_HPP_
#define NETMORPH_RECEPTIVE_FIELD_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "netmorph/network.hpp"

namespace netmorph {

/// Reduced fraction num/den with den > 0.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  Rational operator+(const Rational& o) const;
  Rational operator*(std::int64_t k) const;
  bool operator==(const Rational&) const = default;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const;
};

/// (size, jump, offset) of one output unit in input pixels. `offset` is the
/// input coordinate of the centre of the first output unit's window.
struct ReceptiveFieldState {
  std::int64_t size = 1;
  std::int64_t jump = 1;
  Rational offset{0, 1};

  /// r' = r + (k-1)j, j' = js, offset' = offset + ((k-1)/2 - p) j.
  ReceptiveFieldState then(std::int64_t kernel, std::int64_t stride,
                           std::int64_t padding) const;
  /// Composes this state with one expressed relative to our output grid.
  ReceptiveFieldState compose(const ReceptiveFieldState& next) const;

  bool operator==(const ReceptiveFieldState&) const = default;
};

/// Folds the recurrence over a chain (residual blocks use their main path).
/// Throws SchemaError past a GlobalAvgPool/Linear layer.
ReceptiveFieldState fold_receptive_field(const std::vector<LayerNode>& chain,
                                         ReceptiveFieldState start = {});

/// State after `upto_layer` (inclusive). Throws SchemaError for unknown
/// names or names nested inside residual blocks.
ReceptiveFieldState receptive_field(const NetworkSpec& net, std::string_view upto_layer);

}  // namespace netmorph

#endif  // NETMORPH_RECEPTIVE_FIELD_HPP_
