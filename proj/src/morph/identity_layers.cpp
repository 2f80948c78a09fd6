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

#include <cmath>

#include "netmorph/morph.hpp"

namespace netmorph {

BatchNormParams make_identity_batchnorm(std::size_t channels, double epsilon, DType dtype) {
  if (channels == 0) throw std::invalid_argument("identity batchnorm needs >= 1 channel");
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw std::invalid_argument("identity batchnorm epsilon must lie in (0, 0.5)");
  }
  // var lies in [0.5, 1], so 1 - var is exact (Sterbenz) and var + (1 - var)
  // rounds to exactly 1.
  const double var = round_to(dtype, 1.0 - epsilon);
  const double eps = 1.0 - var;

  BatchNormParams p;
  p.gamma = Tensor::filled({channels}, 1.0, dtype);
  p.beta = Tensor::filled({channels}, 0.0, dtype);
  p.running_mean = Tensor::filled({channels}, 0.0, dtype);
  p.running_var = Tensor::filled({channels}, var, dtype);
  p.epsilon = eps;
  if (std::sqrt(var + eps) != 1.0) throw std::logic_error("identity batchnorm is not exact");
  return p;
}

ActivationParams make_identity_prelu() { return ActivationParams{1.0}; }

}  // namespace netmorph
