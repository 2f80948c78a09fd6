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

#include "netmorph/receptive_field.hpp"

#include <numeric>

namespace netmorph {

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return g > 1 ? Rational{num / g, den / g} : Rational{num, den};
}

Rational Rational::operator+(const Rational& o) const {
  return make(num * o.den + o.num * den, den * o.den);
}

Rational Rational::operator*(std::int64_t k) const { return make(num * k, den); }

std::string Rational::to_string() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

ReceptiveFieldState ReceptiveFieldState::then(std::int64_t kernel, std::int64_t stride,
                                              std::int64_t padding) const {
  ReceptiveFieldState out;
  out.size = size + (kernel - 1) * jump;
  out.jump = jump * stride;
  out.offset = offset + Rational::make(kernel - 1 - 2 * padding, 2) * jump;
  return out;
}

ReceptiveFieldState ReceptiveFieldState::compose(const ReceptiveFieldState& next) const {
  ReceptiveFieldState out;
  out.size = size + (next.size - 1) * jump;
  out.jump = jump * next.jump;
  out.offset = offset + next.offset * jump;
  return out;
}

namespace {

ReceptiveFieldState step(const ReceptiveFieldState& rf, const LayerNode& node) {
  switch (node.kind()) {
    case LayerKind::kConv2d: {
      const auto& a = node.as<Conv2dAttrs>();
      return rf.then(static_cast<std::int64_t>(a.kernel_size),
                     static_cast<std::int64_t>(a.stride), static_cast<std::int64_t>(a.padding));
    }
    case LayerKind::kMaxPool2d: {
      const auto& a = node.as<MaxPoolAttrs>();
      return rf.then(static_cast<std::int64_t>(a.kernel_size),
                     static_cast<std::int64_t>(a.stride), 0);
    }
    case LayerKind::kResidualBlock:
      return fold_receptive_field(node.as<ResidualAttrs>().main, rf);
    case LayerKind::kBatchNorm2d:
    case LayerKind::kActivation:
      return rf;
    case LayerKind::kGlobalAvgPool:
    case LayerKind::kLinear:
      break;
  }
  throw SchemaError("receptive field is undefined past non-spatial layer '" + node.name + "'");
}

}  // namespace

ReceptiveFieldState fold_receptive_field(const std::vector<LayerNode>& chain,
                                         ReceptiveFieldState start) {
  for (const auto& node : chain) start = step(start, node);
  return start;
}

ReceptiveFieldState receptive_field(const NetworkSpec& net, std::string_view upto_layer) {
  ReceptiveFieldState rf;
  for (const auto& node : net.layers) {
    rf = step(rf, node);
    if (node.name == upto_layer) return rf;
  }
  throw SchemaError("unknown layer '" + std::string(upto_layer) + "'");
}

}  // namespace netmorph
