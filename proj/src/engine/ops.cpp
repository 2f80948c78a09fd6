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
#include <cmath>
#include <limits>

#include "netmorph/engine.hpp"
#include "netmorph/shape_inference.hpp"

namespace netmorph {

namespace {

void require_rank(const Tensor& t, std::size_t rank, std::string_view what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                     ", got shape " + shape_to_string(t.shape()));
  }
}

// First output index whose window tap `tap` lands at input index >= 0, and
// one past the last whose tap lands at input index < extent.
std::pair<std::size_t, std::size_t> valid_range(std::size_t out_extent, std::size_t in_extent,
                                                std::size_t stride, std::size_t padding,
                                                std::size_t tap) {
  // need y*s + tap - p in [0, in_extent)
  std::size_t lo = 0;
  if (padding > tap) lo = (padding - tap + stride - 1) / stride;
  // y*s <= in_extent - 1 + p - tap
  const std::ptrdiff_t top = static_cast<std::ptrdiff_t>(in_extent) - 1 +
                             static_cast<std::ptrdiff_t>(padding) -
                             static_cast<std::ptrdiff_t>(tap);
  if (top < 0) return {0, 0};
  std::size_t hi = static_cast<std::size_t>(top) / stride + 1;
  hi = std::min(hi, out_extent);
  lo = std::min(lo, hi);
  return {lo, hi};
}

}  // namespace

Tensor conv2d(const Tensor& input, const ConvParams& params, std::size_t stride,
              std::size_t padding) {
  require_rank(input, 3, "conv2d input");
  require_rank(params.kernel, 4, "conv2d kernel");
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t cout = params.kernel.dim(0), k = params.kernel.dim(2);
  if (params.kernel.dim(1) != cin || params.kernel.dim(3) != k) {
    throw ShapeError("conv2d: kernel " + shape_to_string(params.kernel.shape()) +
                     " incompatible with input " + shape_to_string(input.shape()));
  }
  if (params.bias && params.bias->shape() != Shape{cout}) {
    throw ShapeError("conv2d: bias shape " + shape_to_string(params.bias->shape()) +
                     " does not match " + std::to_string(cout) + " output channels");
  }
  const std::size_t ho = conv_output_size(h, k, stride, padding);
  const std::size_t wo = conv_output_size(w, k, stride, padding);

  const auto in = input.data();
  const auto ker = params.kernel.data();
  std::vector<double> out(cout * ho * wo);
  std::vector<double> acc(ho * wo);

  // Per output element the terms are summed in (i, u, v) order, the same
  // order as the textbook six-deep loop; padded taps contribute nothing.
  for (std::size_t o = 0; o < cout; ++o) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < cin; ++i) {
      const double* plane = in.data() + i * h * w;
      for (std::size_t u = 0; u < k; ++u) {
        const auto [ylo, yhi] = valid_range(ho, h, stride, padding, u);
        for (std::size_t v = 0; v < k; ++v) {
          const double wt = ker[((o * cin + i) * k + u) * k + v];
          const auto [xlo, xhi] = valid_range(wo, w, stride, padding, v);
          if (xlo >= xhi) continue;
          const std::size_t n = xhi - xlo;
          const std::size_t first = xlo * stride + v - padding;
          for (std::size_t y = ylo; y < yhi; ++y) {
            const double* src = plane + (y * stride + u - padding) * w + first;
            double* dst = acc.data() + y * wo + xlo;
            if (stride == 1) {
              for (std::size_t x = 0; x < n; ++x) dst[x] += wt * src[x];
            } else {
              for (std::size_t x = 0; x < n; ++x) dst[x] += wt * src[x * stride];
            }
          }
        }
      }
    }
    const double b = params.bias ? (*params.bias)[o] : 0.0;
    double* dst = out.data() + o * ho * wo;
    if (params.bias) {
      for (std::size_t j = 0; j < ho * wo; ++j) dst[j] = acc[j] + b;
    } else {
      std::copy(acc.begin(), acc.end(), dst);
    }
  }
  return Tensor({cout, ho, wo}, std::move(out), input.dtype());
}

Tensor maxpool2d(const Tensor& input, std::size_t kernel, std::size_t stride) {
  require_rank(input, 3, "maxpool2d input");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t ho = conv_output_size(h, kernel, stride, 0);
  const std::size_t wo = conv_output_size(w, kernel, stride, 0);
  std::vector<double> out(c * ho * wo);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t x = 0; x < wo; ++x) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < kernel; ++u) {
          for (std::size_t v = 0; v < kernel; ++v) {
            m = std::max(m, input.at(ch, y * stride + u, x * stride + v));
          }
        }
        out[(ch * ho + y) * wo + x] = m;
      }
    }
  }
  return Tensor({c, ho, wo}, std::move(out), input.dtype());
}

Tensor batchnorm_infer(const Tensor& input, const BatchNormParams& params) {
  require_rank(input, 3, "batchnorm input");
  const std::size_t c = input.dim(0);
  const Shape cs{c};
  if (params.gamma.shape() != cs || params.beta.shape() != cs ||
      params.running_mean.shape() != cs || params.running_var.shape() != cs) {
    throw ShapeError("batchnorm: parameters do not match " + std::to_string(c) + " channels");
  }
  const std::size_t plane = input.dim(1) * input.dim(2);
  const auto in = input.data();
  std::vector<double> out(in.size());
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double g = params.gamma[ch], b = params.beta[ch], mu = params.running_mean[ch];
    const double denom = std::sqrt(params.running_var[ch] + params.epsilon);
    for (std::size_t j = ch * plane; j < (ch + 1) * plane; ++j) {
      out[j] = g * (in[j] - mu) / denom + b;
    }
  }
  return Tensor(input.shape(), std::move(out), input.dtype());
}

Tensor activation(const Tensor& input, ActivationMode mode, double slope) {
  const auto in = input.data();
  std::vector<double> out(in.size());
  const double a = mode == ActivationMode::kRelu ? 0.0 : slope;
  for (std::size_t j = 0; j < in.size(); ++j) {
    const double x = in[j];
    if (x >= 0.0) {
      out[j] = x;
    } else {
      out[j] = mode == ActivationMode::kRelu ? 0.0 : a * x;
    }
  }
  return Tensor(input.shape(), std::move(out), input.dtype());
}

Tensor global_avg_pool(const Tensor& input) {
  require_rank(input, 3, "global_avg_pool input");
  const std::size_t c = input.dim(0), plane = input.dim(1) * input.dim(2);
  const auto in = input.data();
  std::vector<double> out(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::size_t j = ch * plane; j < (ch + 1) * plane; ++j) s += in[j];
    out[ch] = s / static_cast<double>(plane);
  }
  return Tensor({c}, std::move(out), input.dtype());
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(weight, 2, "linear weight");
  const std::size_t n_out = weight.dim(0), n_in = weight.dim(1);
  if (input.size() != n_in || bias.shape() != Shape{n_out}) {
    throw ShapeError("linear: weight " + shape_to_string(weight.shape()) + ", bias " +
                     shape_to_string(bias.shape()) + " incompatible with input " +
                     shape_to_string(input.shape()));
  }
  const auto in = input.data();
  const auto wt = weight.data();
  std::vector<double> out(n_out);
  for (std::size_t o = 0; o < n_out; ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_in; ++i) acc += wt[o * n_in + i] * in[i];
    out[o] = acc + bias[o];
  }
  return Tensor({n_out}, std::move(out), input.dtype());
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()) + " differ");
  }
  std::vector<double> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] + b[j];
  return Tensor(a.shape(), std::move(out), a.dtype());
}

}  // namespace netmorph
