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

#ifndef IRDIST_QUANT_HPP_
#define IRDIST_QUANT_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "irdist/arch.hpp"
#include "irdist/data.hpp"
#include "irdist/nn.hpp"
#include "irdist/quant_params.hpp"

namespace irdist {

// Fixed-point form of a positive real multiplier: real ~= multiplier * 2^-shift
// with multiplier in [2^30, 2^31) and shift in [1, 62].
struct Requantizer {
  std::int32_t multiplier = 0;
  int shift = 1;
  bool saturated = false;  // real multiplier was >= 2^30 and got clipped

  static Requantizer from_real(double real_multiplier);

  // round_half_away_from_zero(acc * multiplier / 2^shift) with an int64
  // product, clamped to the int32 range.
  std::int32_t apply(std::int32_t acc) const;
  double real() const;

  bool operator==(const Requantizer&) const = default;
};

// Conv or dense layer in the int8 domain.
struct QuantizedLayer {
  LayerKind kind = LayerKind::kConv;
  Activation activation = Activation::kRelu;
  Shape input_shape;
  Shape output_shape;
  std::vector<std::int8_t> weights;  // same layout as the float weights
  std::vector<std::int32_t> bias;    // scale = input.scale * weight_scale
  double weight_scale = 1.0;
  QuantParams input;
  QuantParams output;
  Requantizer requant;

  bool operator==(const QuantizedLayer&) const = default;
};

struct QuantizedModel {
  ArchConfig arch;
  QuantParams input;   // model input
  QuantParams output;  // logit
  std::vector<QuantizedLayer> layers;
  std::vector<std::string> flags;  // degenerate ranges, clipped biases, ...

  // Bytes of int8 weights plus int32 biases.
  std::size_t parameter_bytes() const;
  FakeQuantSpec activation_spec() const;

  bool operator==(const QuantizedModel&) const = default;
};

// Per-tensor symmetric weight scale max|w|/127 (floored).
double symmetric_weight_scale(std::span<const float> weights, bool* degenerate = nullptr);

// Post-training calibration: activation ranges are min/max over float
// forward passes on calib_inputs (extended to include 0). Throws
// InvalidArgumentError without calibration data.
QuantizedModel calibrate(const ArchConfig& arch, const ModelParams<float>& params,
                         std::span<const Tensor> calib_inputs);
QuantizedModel calibrate(const ArchConfig& arch, const ModelParams<float>& params,
                         std::span<const Sample> calib_samples);

// Float weights and biases exactly representable in the quantized model.
ModelParams<double> dequantized_params(const QuantizedModel& model);

// Float-arithmetic forward pass where the input, every weight, bias and
// activation goes through its quantizer.
double fake_quant_logit(const QuantizedModel& model, const TensorD& sample);
double fake_quant_forward(const QuantizedModel& model, const TensorD& sample);
double fake_quant_forward(const QuantizedModel& model, const Tensor& sample);

std::vector<std::int8_t> quantize_input(const QuantizedModel& model, const Tensor& sample);

struct IntInferResult {
  std::int8_t output = 0;  // logit code
  double logit = 0.0;      // dequantized
  double probability = 0.0;
  std::uint64_t macs = 0;
};

// Integer-only inference; only the final sigmoid runs in floating point.
IntInferResult int_infer(const QuantizedModel& model, std::span<const std::int8_t> input);

std::vector<double> predict_int8(const QuantizedModel& model, std::span<const Sample> samples);

// Hooks that turn fit() into quantization-aware training: weights are
// fake-quantized per step, activations with ranges recalibrated on
// calib_inputs at every epoch.
TrainHooks make_qat_hooks(const ArchConfig& arch, std::vector<Tensor> calib_inputs);

inline constexpr double kQatInitialLr = 5e-4;
inline constexpr std::size_t kDefaultCalibrationSamples = 512;

// Evenly spaced subset of the training samples.
std::vector<Tensor> calibration_inputs(std::span<const Sample> train,
                                       std::size_t count = kDefaultCalibrationSamples);

struct QatResult {
  ModelParams<float> params;
  TrainReport report;
  QuantizedModel model;
};

// Same protocol as float training, starting from converged float
// parameters. config.initial_lr is used as given; pass kQatInitialLr for the
// standard protocol.
QatResult qat_finetune(const ArchConfig& arch, const ModelParams<float>& float_params,
                       const DatasetSplit& split, const TrainConfig& config);

}  // namespace irdist

#endif  // IRDIST_QUANT_HPP_
