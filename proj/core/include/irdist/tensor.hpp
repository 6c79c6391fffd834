/* Copyright 2026 The irdist Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef IRDIST_TENSOR_HPP_
#define IRDIST_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace irdist {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major array. Images are laid out height x width x channels,
// convolution kernels as 3 x 3 x cin x cout, dense weights as n x m.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T{0});
  BasicTensor(Shape shape, std::vector<T> data);

  // Rejects NaN and Inf; use for anything read from outside the process.
  static BasicTensor from_external(Shape shape, std::vector<T> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // 3-D (h, w, c) accessors.
  T& at(std::size_t i, std::size_t j, std::size_t k) noexcept {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  BasicTensor reshaped(Shape shape) const;
  void fill(T value);

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  bool operator==(const BasicTensor&) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
// 64-bit variant used by gradient and parity oracles.
using TensorD = BasicTensor<double>;

// out[i,j,o] = bias[o] + sum_{di,dj,c} input[i+di, j+dj, c] * kernels[di,dj,c,o]
template <typename T>
BasicTensor<T> conv2d_valid(const BasicTensor<T>& input,
                            const BasicTensor<T>& kernels,
                            const BasicTensor<T>& bias);

// Non-overlapping 2x2 windows, stride 2; a trailing odd row/column is dropped.
template <typename T>
BasicTensor<T> maxpool2x2(const BasicTensor<T>& input);

// Same as maxpool2x2, additionally reporting the flat input index that won
// each output cell (first maximum in row-major window order).
template <typename T>
BasicTensor<T> maxpool2x2(const BasicTensor<T>& input,
                          std::vector<std::size_t>& argmax);

// out[j] = bias[j] + sum_i input[i] * weights[i,j]. The input may have any
// shape; it is read flat.
template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                     const BasicTensor<T>& bias);

template <typename T>
BasicTensor<T> relu(BasicTensor<T> x);

template <typename T>
BasicTensor<T> sigmoid(BasicTensor<T> x);

template <typename T>
T sigmoid(T x);

inline constexpr std::size_t kKernelSize = 3;

// Multiply-accumulate counts of a single kernel invocation.
std::uint64_t conv2d_valid_macs(std::size_t h, std::size_t w, std::size_t cin,
                                std::size_t cout);
std::uint64_t dense_macs(std::size_t fan_in, std::size_t fan_out);

}  // namespace irdist

#endif  // IRDIST_TENSOR_HPP_
