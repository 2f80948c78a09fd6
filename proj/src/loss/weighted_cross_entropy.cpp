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

#include "netmorph/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace netmorph {

namespace {

void check_batch(const LossBatch& batch, const ClassWeights& w) {
  if (batch.logits.rank() != 2) {
    throw ShapeError("logits must be (N, C), got " + shape_to_string(batch.logits.shape()));
  }
  const std::size_t n = batch.logits.dim(0), c = batch.logits.dim(1);
  if (n == 0 || n != batch.labels.size()) {
    throw ShapeError("batch has " + std::to_string(n) + " logit rows and " +
                     std::to_string(batch.labels.size()) + " labels");
  }
  if (c != w.num_classes()) {
    throw ShapeError("logits have " + std::to_string(c) + " classes, weights have " +
                     std::to_string(w.num_classes()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (batch.labels[i] >= c) {
      throw std::out_of_range("label " + std::to_string(batch.labels[i]) + " of sample " +
                              std::to_string(i) + " is outside [0, " + std::to_string(c) + ")");
    }
  }
}

// Max-shifted log-sum-exp of one row.
double log_sum_exp(const double* row, std::size_t c) {
  const double m = *std::max_element(row, row + c);
  double s = 0.0;
  for (std::size_t j = 0; j < c; ++j) s += std::exp(row[j] - m);
  return m + std::log(s);
}

double normaliser(const LossBatch& batch, const ClassWeights& w, Reduction reduction) {
  switch (reduction) {
    case Reduction::kSum:
      return 1.0;
    case Reduction::kMean:
      return static_cast<double>(batch.size());
    case Reduction::kWeightedMean: {
      double s = 0.0;
      for (auto y : batch.labels) s += w.weights[y];
      return s;
    }
  }
  return 1.0;
}

}  // namespace

ClassWeights ClassWeights::uniform(std::size_t classes) {
  return ClassWeights{std::vector<double>(classes, 1.0), std::vector<std::uint64_t>(classes, 1)};
}

ClassWeights class_weights(std::span<const std::uint64_t> counts) {
  if (counts.size() < 2) throw std::invalid_argument("class_weights needs at least 2 classes");
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) {
      throw std::invalid_argument("class " + std::to_string(k) + " has zero cases");
    }
  }
  // Same value as (C / n_k) / sum_j (1 / n_j); written over ratios so that
  // equal counts give weights of exactly 1.
  const double c = static_cast<double>(counts.size());
  ClassWeights w;
  w.counts.assign(counts.begin(), counts.end());
  for (auto nk : counts) {
    double s = 0.0;
    for (auto nj : counts) s += static_cast<double>(nk) / static_cast<double>(nj);
    w.weights.push_back(c / s);
  }
  return w;
}

Reduction parse_reduction(std::string_view name) {
  if (name == "sum") return Reduction::kSum;
  if (name == "mean") return Reduction::kWeightedMean;
  if (name == "batch-mean") return Reduction::kMean;
  throw std::invalid_argument("unknown reduction '" + std::string(name) +
                              "' (expected sum, mean or batch-mean)");
}

std::string_view reduction_name(Reduction r) {
  switch (r) {
    case Reduction::kSum:
      return "sum";
    case Reduction::kWeightedMean:
      return "mean";
    case Reduction::kMean:
      return "batch-mean";
  }
  return "mean";
}

std::vector<double> weighted_cross_entropy_per_sample(const LossBatch& batch,
                                                      const ClassWeights& w) {
  check_batch(batch, w);
  const std::size_t n = batch.logits.dim(0), c = batch.logits.dim(1);
  const double* o = batch.logits.data().data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = o + i * c;
    const std::size_t y = batch.labels[i];
    out[i] = w.weights[y] * (log_sum_exp(row, c) - row[y]);
  }
  return out;
}

double weighted_cross_entropy(const LossBatch& batch, const ClassWeights& w,
                              Reduction reduction) {
  const auto per_sample = weighted_cross_entropy_per_sample(batch, w);
  double total = 0.0;
  for (double l : per_sample) total += l;
  const double norm = normaliser(batch, w, reduction);
  return norm > 0.0 ? total / norm : 0.0;
}

Tensor wce_gradient(const LossBatch& batch, const ClassWeights& w, Reduction reduction) {
  check_batch(batch, w);
  const std::size_t n = batch.logits.dim(0), c = batch.logits.dim(1);
  const double norm = normaliser(batch, w, reduction);
  const double scale = norm > 0.0 ? 1.0 / norm : 0.0;
  const double* o = batch.logits.data().data();
  std::vector<double> grad(n * c);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = o + i * c;
    const std::size_t y = batch.labels[i];
    const double lse = log_sum_exp(row, c);
    const double wy = w.weights[y] * scale;
    for (std::size_t j = 0; j < c; ++j) {
      const double p = std::exp(row[j] - lse);
      grad[i * c + j] = wy * (p - (j == y ? 1.0 : 0.0));
    }
  }
  return Tensor({n, c}, std::move(grad));
}

}  // namespace netmorph
