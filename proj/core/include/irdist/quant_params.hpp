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

#ifndef IRDIST_QUANT_PARAMS_HPP_
#define IRDIST_QUANT_PARAMS_HPP_

#include <cstdint>
#include <vector>

namespace irdist {

inline constexpr int kQMin = -128;
inline constexpr int kQMax = 127;
inline constexpr int kWeightQMax = 127;  // symmetric weights never use -128
inline constexpr double kScaleFloor = 1e-8;

// Affine int8 mapping real = scale * (q - zero_point).
struct QuantParams {
  double scale = 1.0;
  int zero_point = 0;

  // Asymmetric params covering [lo, hi] extended to include 0.
  static QuantParams from_range(double lo, double hi, bool* degenerate = nullptr);

  // Rounding half away from zero, then clamp to [-128, 127].
  std::int8_t quantize(double x) const;
  double dequantize(int q) const { return scale * (q - zero_point); }
  double fake_quantize(double x) const { return dequantize(quantize(x)); }

  double real_min() const { return dequantize(kQMin); }
  double real_max() const { return dequantize(kQMax); }

  bool operator==(const QuantParams&) const = default;
};

// Activation quantizers applied during a fake-quantized forward pass:
// the model input, and the post-activation output of every conv/dense
// layer in plan order (the last one is the logit).
struct FakeQuantSpec {
  QuantParams input;
  std::vector<QuantParams> outputs;
};

}  // namespace irdist

#endif  // IRDIST_QUANT_PARAMS_HPP_
