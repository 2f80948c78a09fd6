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

// Helpers shared by the test binaries. The reference convolution here is a
// deliberately naive re-derivation (explicit padded copy, textbook loops) so
// it can serve as an oracle for the engine.

#ifndef NETMORPH_TESTS_TEST_SUPPORT_HPP_
#define NETMORPH_TESTS_TEST_SUPPORT_HPP_

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "netmorph/engine.hpp"
#include "netmorph/network.hpp"
#include "netmorph/tensor.hpp"

namespace netmorph::testing {

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng,
                            DType dtype = DType::kF64, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = n(rng);
  return Tensor(shape, std::move(v), dtype);
}

inline std::size_t uniform_int(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// out[o][y][x] = b[o] + sum in_padded[i][y*s+u][x*s+v] * w[o][i][u][v]
inline std::vector<double> reference_conv(const Tensor& in, const Tensor& w,
                                          const std::vector<double>& bias, std::size_t s,
                                          std::size_t p, std::size_t* ho, std::size_t* wo) {
  const std::size_t ci = in.dim(0), h = in.dim(1), wd = in.dim(2);
  const std::size_t co = w.dim(0), k = w.dim(2);
  const std::size_t hp = h + 2 * p, wp = wd + 2 * p;
  std::vector<double> padded(ci * hp * wp, 0.0);
  for (std::size_t c = 0; c < ci; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < wd; ++x) padded[(c * hp + y + p) * wp + x + p] = in.at(c, y, x);
  *ho = (hp - k) / s + 1;
  *wo = (wp - k) / s + 1;
  std::vector<double> out(co * *ho * *wo);
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t y = 0; y < *ho; ++y)
      for (std::size_t x = 0; x < *wo; ++x) {
        double acc = 0.0;
        for (std::size_t c = 0; c < ci; ++c)
          for (std::size_t u = 0; u < k; ++u)
            for (std::size_t v = 0; v < k; ++v)
              acc += padded[(c * hp + y * s + u) * wp + x * s + v] * w.at(o, c, u, v);
        out[(o * *ho + y) * *wo + x] = acc + (bias.empty() ? 0.0 : bias[o]);
      }
  return out;
}

inline LayerNode conv_node(std::string name, std::size_t in, std::size_t out, std::size_t k,
                           std::size_t s = 1, std::size_t p = 0, bool bias = false) {
  return {std::move(name), Conv2dAttrs{in, out, k, s, p, bias}};
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("netmorph_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace netmorph::testing

#endif  // NETMORPH_TESTS_TEST_SUPPORT_HPP_
