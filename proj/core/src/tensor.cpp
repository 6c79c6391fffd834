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

#include "irdist/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "irdist/error.hpp"

namespace irdist {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw InvalidArgumentError("tensor: shape " + shape_to_string(shape_) +
                               " does not match " +
                               std::to_string(data_.size()) + " values");
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_external(Shape shape, std::vector<T> data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw InvalidArgumentError("tensor: non-finite value at index " +
                                 std::to_string(i));
    }
  }
  return BasicTensor(std::move(shape), std::move(data));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const {
  return BasicTensor(std::move(shape), data_);
}

template <typename T>
void BasicTensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
BasicTensor<T> conv2d_valid(const BasicTensor<T>& input,
                            const BasicTensor<T>& kernels,
                            const BasicTensor<T>& bias) {
  if (input.rank() != 3 || kernels.rank() != 4 || bias.rank() != 1) {
    throw InvalidArgumentError("conv2d_valid: expected ranks 3/4/1, got " +
                               shape_to_string(input.shape()) + " " +
                               shape_to_string(kernels.shape()) + " " +
                               shape_to_string(bias.shape()));
  }
  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const std::size_t cout = kernels.dim(3);
  if (h < kKernelSize || w < kKernelSize || cin == 0 || cout == 0 ||
      kernels.dim(0) != kKernelSize || kernels.dim(1) != kKernelSize ||
      kernels.dim(2) != cin || bias.dim(0) != cout) {
    throw InvalidArgumentError("conv2d_valid: incompatible shapes " +
                               shape_to_string(input.shape()) + " " +
                               shape_to_string(kernels.shape()) + " " +
                               shape_to_string(bias.shape()));
  }
  const std::size_t oh = h - 2, ow = w - 2;
  BasicTensor<T> out({oh, ow, cout});
  const T* in = input.data().data();
  const T* k = kernels.data().data();
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      T* o = &out.at(i, j, 0);
      for (std::size_t oc = 0; oc < cout; ++oc) o[oc] = bias[oc];
      for (std::size_t di = 0; di < kKernelSize; ++di) {
        for (std::size_t dj = 0; dj < kKernelSize; ++dj) {
          const T* px = in + ((i + di) * w + (j + dj)) * cin;
          const T* kk = k + (di * kKernelSize + dj) * cin * cout;
          for (std::size_t c = 0; c < cin; ++c) {
            const T v = px[c];
            const T* krow = kk + c * cout;
            for (std::size_t oc = 0; oc < cout; ++oc) o[oc] += v * krow[oc];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> maxpool2x2(const BasicTensor<T>& input,
                          std::vector<std::size_t>& argmax) {
  if (input.rank() != 3 || input.dim(0) < 2 || input.dim(1) < 2) {
    throw InvalidArgumentError("maxpool2x2: need (h>=2, w>=2, c), got " +
                               shape_to_string(input.shape()));
  }
  const std::size_t w = input.dim(1), c = input.dim(2);
  const std::size_t oh = input.dim(0) / 2, ow = w / 2;
  BasicTensor<T> out({oh, ow, c});
  argmax.assign(out.size(), 0);
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        std::size_t best = ((2 * i) * w + 2 * j) * c + ch;
        for (std::size_t di = 0; di < 2; ++di) {
          for (std::size_t dj = 0; dj < 2; ++dj) {
            const std::size_t idx = ((2 * i + di) * w + (2 * j + dj)) * c + ch;
            if (input[idx] > input[best]) best = idx;
          }
        }
        const std::size_t o = (i * ow + j) * c + ch;
        out[o] = input[best];
        argmax[o] = best;
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> maxpool2x2(const BasicTensor<T>& input) {
  std::vector<std::size_t> unused;
  return maxpool2x2(input, unused);
}

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                     const BasicTensor<T>& bias) {
  if (weights.rank() != 2 || bias.rank() != 1 ||
      weights.dim(0) != input.size() || weights.dim(1) != bias.dim(0)) {
    throw InvalidArgumentError("dense: incompatible shapes " +
                               shape_to_string(input.shape()) + " " +
                               shape_to_string(weights.shape()) + " " +
                               shape_to_string(bias.shape()));
  }
  const std::size_t n = weights.dim(0), m = weights.dim(1);
  BasicTensor<T> out({m});
  for (std::size_t j = 0; j < m; ++j) out[j] = bias[j];
  const T* wd = weights.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const T v = input[i];
    const T* row = wd + i * m;
    for (std::size_t j = 0; j < m; ++j) out[j] += v * row[j];
  }
  return out;
}

template <typename T>
BasicTensor<T> relu(BasicTensor<T> x) {
  for (T& v : x.data()) v = v > T{0} ? v : T{0};
  return x;
}

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
BasicTensor<T> sigmoid(BasicTensor<T> x) {
  for (T& v : x.data()) v = sigmoid(v);
  return x;
}

std::uint64_t conv2d_valid_macs(std::size_t h, std::size_t w, std::size_t cin,
                                std::size_t cout) {
  return static_cast<std::uint64_t>(h - 2) * (w - 2) * cout * kKernelSize *
         kKernelSize * cin;
}

std::uint64_t dense_macs(std::size_t fan_in, std::size_t fan_out) {
  return static_cast<std::uint64_t>(fan_in) * fan_out;
}

#define IRDIST_INSTANTIATE(T)                                                 \
  template class BasicTensor<T>;                                              \
  template BasicTensor<T> conv2d_valid(const BasicTensor<T>&,                 \
                                       const BasicTensor<T>&,                 \
                                       const BasicTensor<T>&);                \
  template BasicTensor<T> maxpool2x2(const BasicTensor<T>&);                  \
  template BasicTensor<T> maxpool2x2(const BasicTensor<T>&,                   \
                                     std::vector<std::size_t>&);              \
  template BasicTensor<T> dense(const BasicTensor<T>&, const BasicTensor<T>&, \
                                const BasicTensor<T>&);                       \
  template BasicTensor<T> relu(BasicTensor<T>);                               \
  template BasicTensor<T> sigmoid(BasicTensor<T>);                            \
  template T sigmoid(T);

IRDIST_INSTANTIATE(float)
IRDIST_INSTANTIATE(double)

#undef IRDIST_INSTANTIATE

}  // namespace irdist
