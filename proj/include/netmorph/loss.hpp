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

#ifndef NETMORPH_LOSS_HPP_
#define NETMORPH_LOSS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "netmorph/tensor.hpp"

namespace netmorph {

/// Per-class weights inversely proportional to class counts, mean 1.
struct ClassWeights {
  std::vector<double> weights;
  std::vector<std::uint64_t> counts;

  std::size_t num_classes() const { return weights.size(); }
  /// All ones for `classes` classes (plain cross entropy).
  static ClassWeights uniform(std::size_t classes);
};

/// w[k] = (C / counts[k]) / sum_j (1 / counts[j]). Requires C >= 2 and
/// every count >= 1.
ClassWeights class_weights(std::span<const std::uint64_t> counts);

struct LossBatch {
  Tensor logits;  // (N, C)
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
};

enum class Reduction {
  kSum,
  kWeightedMean,  // divide by sum_i w[y_i]
  kMean,          // divide by N
};

Reduction parse_reduction(std::string_view name);
std::string_view reduction_name(Reduction r);

/// Per sample: w[y] * (logsumexp(o) - o[y]), with max-shifted logsumexp.
/// All arithmetic in double.
std::vector<double> weighted_cross_entropy_per_sample(const LossBatch& batch,
                                                      const ClassWeights& w);

double weighted_cross_entropy(const LossBatch& batch, const ClassWeights& w,
                              Reduction reduction = Reduction::kWeightedMean);

/// d loss / d logits (N, C): w[y_i] * (softmax(o_i) - onehot(y_i)), scaled
/// by the reduction's normaliser.
Tensor wce_gradient(const LossBatch& batch, const ClassWeights& w,
                    Reduction reduction = Reduction::kSum);

}  // namespace netmorph

#endif  // NETMORPH_LOSS_HPP_
