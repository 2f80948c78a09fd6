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

#include "netmorph/engine.hpp"

namespace netmorph {

Tensor compose_kernels(const Tensor& first, const Tensor& second) {
  if (first.rank() != 4 || second.rank() != 4 || first.dim(2) != first.dim(3) ||
      second.dim(2) != second.dim(3)) {
    throw ShapeError("compose_kernels: expected square 4D kernels, got " +
                     shape_to_string(first.shape()) + " and " + shape_to_string(second.shape()));
  }
  const std::size_t mid = first.dim(0), cin = first.dim(1), k1 = first.dim(2);
  const std::size_t cout = second.dim(0), k2 = second.dim(2);
  if (second.dim(1) != mid) {
    throw ShapeError("compose_kernels: inner channel mismatch (" + std::to_string(mid) +
                     " vs " + std::to_string(second.dim(1)) + ")");
  }
  const std::size_t k = k1 + k2 - 1;
  std::vector<double> out(cout * cin * k * k, 0.0);
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t i = 0; i < cin; ++i) {
      double* dst = out.data() + (o * cin + i) * k * k;
      for (std::size_t m = 0; m < mid; ++m) {
        for (std::size_t a = 0; a < k2; ++a) {
          for (std::size_t b = 0; b < k2; ++b) {
            const double s = second.at(o, m, a, b);
            for (std::size_t u = 0; u < k1; ++u) {
              for (std::size_t v = 0; v < k1; ++v) {
                dst[(a + u) * k + (b + v)] += s * first.at(m, i, u, v);
              }
            }
          }
        }
      }
    }
  }
  const DType dtype =
      first.dtype() == DType::kF32 && second.dtype() == DType::kF32 ? DType::kF32 : DType::kF64;
  return Tensor({cout, cin, k, k}, std::move(out), dtype);
}

}  // namespace netmorph
