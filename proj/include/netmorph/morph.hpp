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

#ifndef NETMORPH_MORPH_HPP_
#define NETMORPH_MORPH_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "netmorph/engine.hpp"
#include "netmorph/network.hpp"
#include "netmorph/shape_inference.hpp"
#include "netmorph/tensor.hpp"

namespace netmorph {

/// A rewrite precondition failed; the inputs are left untouched.
class MorphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Morphability condition

/// Parameter-count test for an exact two-factor split of a
/// (C_out, C_in, K, K) kernel through C_mid channels:
///
///   max(C_mid*C_in*K1^2, C_out*C_mid*K2^2) >= C_out*C_in*(K1+K2-1)^2
///
/// The right-hand side counts the entries of the (zero-padded) target. The
/// frequently quoted form with C_out*C_mid on the right is also evaluated
/// (`rhs_mid_form`) so reports can show both; for (3, 64, 64, 5, 3) the
/// target form gives 9408 and the other 200704.
struct MorphCondition {
  bool holds = false;
  std::uint64_t lhs_first = 0;   // C_mid*C_in*K1^2
  std::uint64_t lhs_second = 0;  // C_out*C_mid*K2^2
  std::uint64_t rhs = 0;         // C_out*C_in*(K1+K2-1)^2
  std::uint64_t rhs_mid_form = 0;
};

MorphCondition check_morph_condition(std::size_t c_in, std::size_t c_out, std::size_t c_mid,
                                     std::size_t k1, std::size_t k2);

inline std::size_t effective_kernel_size(std::size_t k1, std::size_t k2) { return k1 + k2 - 1; }

// ---------------------------------------------------------------------------
// Kernel factorization

struct SolverConfig {
  double tolerance = 1e-6;  // relative Frobenius residual
  std::size_t max_iters = 500;
  std::uint64_t seed = 0;
  double ridge = 1e-10;  // relative to the mean diagonal of the normal matrix
};

/// Reads solver.tol / solver.max_iters / solver.seed / solver.ridge from a
/// network's metadata, falling back to `defaults`.
SolverConfig solver_config_from_metadata(const std::map<std::string, std::string>& metadata,
                                         SolverConfig defaults = {});

struct FactorizationProblem {
  Tensor target;  // (C_out, C_in, K, K)
  std::size_t mid_channels = 1;
  std::size_t k1 = 1;
  std::size_t k2 = 1;
  SolverConfig config;

  /// Throws MorphError when K1+K2-1 < K, when K1+K2-1-K is odd (no symmetric
  /// padding), or when the morphability condition fails.
  void validate() const;
};

struct FactorizationResult {
  Tensor first;   // (C_mid, C_in, K1, K1)
  Tensor second;  // (C_out, C_mid, K2, K2)
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Symmetric zero padding of a (.., .., K, K) kernel to size `size`.
Tensor zero_pad_kernel(const Tensor& kernel, std::size_t size);

/// Alternating least squares on compose_kernels(first, second) = padded
/// target. Each half-step is linear in the free factor and decouples over
/// input channels (first) or output channels (second). Returns the best
/// iterate; `converged` is false when the tolerance was not reached.
FactorizationResult solve_kernel_factorization(const FactorizationProblem& problem);

// ---------------------------------------------------------------------------
// Identity layers

/// gamma = 1, beta = 0, mean = 0, var = 1 - eps. The epsilon is nudged so
/// that var + eps == 1 exactly once var is rounded to `dtype`; the returned
/// params then map every input to itself bit for bit.
BatchNormParams make_identity_batchnorm(std::size_t channels, double epsilon = 1e-5,
                                        DType dtype = DType::kF64);

/// PReLU with slope 1.
ActivationParams make_identity_prelu();

// ---------------------------------------------------------------------------
// Rewrites

/// Stored in NetworkSpec metadata under "morph.NNN" as a JSON string.
struct MorphRecord {
  std::string kind;  // "split_conv" | "promote_resolution"
  std::string source_layer;
  std::vector<std::string> inserted;
  std::optional<double> residual;
  std::uint64_t timestamp = 0;  // logical clock: position in the morph history
  std::map<std::string, std::int64_t> details;

  std::string to_json() const;
  static MorphRecord from_json(std::string_view text);
};

std::vector<MorphRecord> morph_history(const NetworkSpec& net);
void append_record(NetworkSpec& net, MorphRecord record);

struct SplitResult {
  NetworkSpec net;
  WeightsStore weights;
  MorphRecord record;
  MorphCondition condition;
  FactorizationResult factorization;
};

/// Replaces Conv2d `layer` by
///   Conv2d(C_in->C_mid, K1, stride 1, p1), identity BatchNorm, identity PReLU,
///   Conv2d(C_mid->C_out, K2, stride s, p2)
/// with p1 + p2 = p + (K1+K2-1-K)/2, p1 = floor. The original bias moves to
/// the second conv. Inserted names are <layer>_1, <layer>_1_bn,
/// <layer>_1_prelu, <layer>_2.
SplitResult split_conv(const NetworkSpec& net, const WeightsStore& weights,
                       std::string_view layer, std::size_t k1, std::size_t k2,
                       std::size_t mid_channels, const SolverConfig& config = {});

struct PromoteResult {
  NetworkSpec net;
  WeightsStore weights;
  std::vector<MorphRecord> records;  // split (when applied) then promotion
  std::vector<LayerShape> shapes_before;
  std::vector<LayerShape> shapes_after;
};

/// Doubles the declared input resolution by rewriting only the front:
/// the first conv gets stride 2, a 2x2/2 max pool is inserted right after
/// its normalisation/activation group, and the second conv gets stride 1.
/// An unsplit front conv is first split 5+3 with C_mid = C_out. The output
/// shape of the second conv is checked against the pre-promotion shape.
PromoteResult promote_resolution(const NetworkSpec& net, const WeightsStore& weights,
                                 const SolverConfig& config = {});

/// Effective kernel of the split recorded for `source_layer`: K1+K2-1 read
/// from the two inserted convs. Throws MorphError if no such split exists or
/// if a padding-free split (recorded K1+K2-1 == K) disagrees with K.
std::size_t verify_effective_kernel(const NetworkSpec& net, std::string_view source_layer);

}  // namespace netmorph

#endif  // NETMORPH_MORPH_HPP_
