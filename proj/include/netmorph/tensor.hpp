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

#ifndef NETMORPH_TENSOR_HPP_
#define NETMORPH_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace netmorph {

/// Thrown for inconsistent tensor/layer geometry.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

std::string_view dtype_name(DType dtype);
DType parse_dtype(std::string_view name);

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Round a double to the storage precision of `dtype`.
inline double round_to(DType dtype, double v) {
  return dtype == DType::kF32 ? static_cast<double>(static_cast<float>(v)) : v;
}

/// Dense row-major array. Elements are held as doubles; an f32 tensor only
/// ever holds values exactly representable as float, so arithmetic on it is
/// f64 accumulation followed by a single rounding on store.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, DType dtype = DType::kF64);
  Tensor(Shape shape, std::vector<double> data, DType dtype = DType::kF64);

  static Tensor zeros(Shape shape, DType dtype = DType::kF64) {
    return Tensor(std::move(shape), dtype);
  }
  static Tensor filled(Shape shape, double value, DType dtype = DType::kF64);
  static Tensor scalar(double value, DType dtype = DType::kF64) {
    return filled({1}, value, dtype);
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  DType dtype() const { return dtype_; }

  std::span<const double> data() const { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Stores `v` rounded to this tensor's dtype.
  void set(std::size_t i, double v) { data_[i] = round_to(dtype_, v); }

  // Rank-3 (C, H, W) accessor.
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  // Rank-4 (O, I, K, K) accessor.
  double at(std::size_t o, std::size_t i, std::size_t y, std::size_t x) const {
    return data_[((o * shape_[1] + i) * shape_[2] + y) * shape_[3] + x];
  }

  Tensor reshaped(Shape shape) const;
  Tensor cast(DType dtype) const;

  /// Exact equality of shape, dtype and every element.
  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  DType dtype_ = DType::kF64;
  std::vector<double> data_;
};

double max_abs(const Tensor& t);
double frobenius_norm(const Tensor& t);

}  // namespace netmorph

#endif  // NETMORPH_TENSOR_HPP_
