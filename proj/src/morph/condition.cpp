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

#include <algorithm>

#include "netmorph/morph.hpp"

namespace netmorph {

MorphCondition check_morph_condition(std::size_t c_in, std::size_t c_out, std::size_t c_mid,
                                     std::size_t k1, std::size_t k2) {
  if (c_in == 0 || c_out == 0 || c_mid == 0 || k1 == 0 || k2 == 0) {
    throw std::invalid_argument("check_morph_condition: all arguments must be positive");
  }
  const std::uint64_t kt = effective_kernel_size(k1, k2);
  MorphCondition c;
  c.lhs_first = std::uint64_t{c_mid} * c_in * k1 * k1;
  c.lhs_second = std::uint64_t{c_out} * c_mid * k2 * k2;
  c.rhs = std::uint64_t{c_out} * c_in * kt * kt;
  c.rhs_mid_form = std::uint64_t{c_out} * c_mid * kt * kt;
  c.holds = std::max(c.lhs_first, c.lhs_second) >= c.rhs;
  return c;
}

}  // namespace netmorph
