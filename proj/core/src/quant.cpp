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

#include "irdist/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "irdist/error.hpp"

namespace irdist {

QuantParams QuantParams::from_range(double lo, double hi, bool* degenerate) {
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  QuantParams q;
  q.scale = (hi - lo) / static_cast<double>(kQMax - kQMin);
  const bool floor = !(q.scale > kScaleFloor);
  if (floor) q.scale = kScaleFloor;
  if (degenerate) *degenerate = floor;
  q.zero_point = static_cast<int>(std::clamp<double>(std::round(kQMin - lo / q.scale), kQMin, kQMax));
  return q;
}

std::int8_t QuantParams::quantize(double x) const {
  const double q = std::round(x / scale) + zero_point;
  return static_cast<std::int8_t>(std::clamp<double>(q, kQMin, kQMax));
}

Requantizer Requantizer::from_real(double real_multiplier) {
  Requantizer r;
  if (!(real_multiplier > 0.0)) return r;
  int exponent = 0;
  const double frac = std::frexp(real_multiplier, &exponent);  // [0.5, 1)
  std::int64_t m = std::llround(frac * static_cast<double>(std::int64_t{1} << 31));
  if (m == (std::int64_t{1} << 31)) {
    m >>= 1;
    ++exponent;
  }
  int shift = 31 - exponent;
  if (shift < 1) {
    r.multiplier = std::numeric_limits<std::int32_t>::max();
    r.shift = 1;
    r.saturated = true;
    return r;
  }
  if (shift > 62) return r;  // |acc * real| < 0.5 for every int32 acc
  r.multiplier = static_cast<std::int32_t>(m);
  r.shift = shift;
  return r;
}

std::int32_t Requantizer::apply(std::int32_t acc) const {
  const std::int64_t prod = static_cast<std::int64_t>(acc) * multiplier;
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  const std::int64_t r = prod >= 0 ? (prod + half) >> shift : -((-prod + half) >> shift);
  return static_cast<std::int32_t>(std::clamp<std::int64_t>(
      r, std::numeric_limits<std::int32_t>::min(), std::numeric_limits<std::int32_t>::max()));
}

double Requantizer::real() const { return std::ldexp(static_cast<double>(multiplier), -shift); }

std::size_t QuantizedModel::parameter_bytes() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + 4 * l.bias.size();
  return n;
}

FakeQuantSpec QuantizedModel::activation_spec() const {
  FakeQuantSpec spec;
  spec.input = input;
  for (const auto& l : layers) spec.outputs.push_back(l.output);
  return spec;
}

double symmetric_weight_scale(std::span<const float> weights, bool* degenerate) {
  double m = 0.0;
  for (float w : weights) m = std::max(m, std::abs(static_cast<double>(w)));
  double s = m / kWeightQMax;
  const bool floor = !(s > kScaleFloor);
  if (floor) s = kScaleFloor;
  if (degenerate) *degenerate = floor;
  return s;
}

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void add(std::span<const float> vs) {
    for (float v : vs) add(static_cast<double>(v));
  }
};

std::int8_t quantize_weight(double w, double scale) {
  return static_cast<std::int8_t>(
      std::clamp<double>(std::round(w / scale), -kWeightQMax, kWeightQMax));
}

// Largest |bias| that keeps the worst-case accumulator inside int32.
std::int64_t bias_limit(std::size_t fan_in) {
  const std::int64_t worst = static_cast<std::int64_t>(fan_in) * 255 * kWeightQMax;
  return std::numeric_limits<std::int32_t>::max() - worst;
}

std::size_t fan_in_of(const QuantizedLayer& l) {
  return l.kind == LayerKind::kConv ? kKernelSize * kKernelSize * l.input_shape[2]
                                    : l.input_shape[0];
}

}  // namespace

QuantizedModel calibrate(const ArchConfig& arch, const ModelParams<float>& params,
                         std::span<const Tensor> calib_inputs) {
  if (calib_inputs.empty()) throw InvalidArgumentError("calibrate: no calibration samples");
  check_params(arch, params);
  const auto plan = shape_plan(arch);

  Range input_range;
  std::vector<Range> out_ranges(params.layers.size());
  for (const Tensor& x : calib_inputs) {
    const auto trace = forward_trace(arch, params, x);
    input_range.add(trace.input.data());
    std::size_t k = 0;
    for (std::size_t l = 0; l < plan.size(); ++l) {
      if (!plan[l].has_params()) continue;
      out_ranges[k++].add(trace.outputs[l].data());
    }
  }

  QuantizedModel qm;
  qm.arch = arch;
  bool degenerate = false;
  qm.input = QuantParams::from_range(input_range.lo, input_range.hi, &degenerate);
  if (degenerate) qm.flags.push_back("degenerate input range");

  QuantParams current = qm.input;
  std::size_t k = 0;
  for (const auto& layer : plan) {
    if (!layer.has_params()) continue;
    const auto& p = params.layers[k];
    QuantizedLayer ql;
    ql.kind = layer.kind;
    ql.activation = layer.activation;
    ql.input_shape = layer.input;
    ql.output_shape = layer.output;
    ql.input = current;
    ql.weight_scale = symmetric_weight_scale(p.weights.data(), &degenerate);
    if (degenerate) qm.flags.push_back("layer " + std::to_string(k) + ": all-zero weights");
    ql.weights.reserve(p.weights.size());
    for (float w : p.weights.data()) ql.weights.push_back(quantize_weight(w, ql.weight_scale));

    const double bias_scale = ql.input.scale * ql.weight_scale;
    const std::int64_t limit = bias_limit(fan_in_of(ql));
    if (limit <= 0) throw InvalidArgumentError("calibrate: layer fan-in overflows int32");
    bool clipped = false;
    for (float b : p.bias.data()) {
      const double q = std::round(static_cast<double>(b) / bias_scale);
      const double c = std::clamp<double>(q, static_cast<double>(-limit), static_cast<double>(limit));
      clipped = clipped || c != q;
      ql.bias.push_back(static_cast<std::int32_t>(c));
    }
    if (clipped) qm.flags.push_back("layer " + std::to_string(k) + ": bias clipped to int32");

    ql.output = QuantParams::from_range(out_ranges[k].lo, out_ranges[k].hi, &degenerate);
    if (degenerate) qm.flags.push_back("layer " + std::to_string(k) + ": degenerate output range");
    ql.requant = Requantizer::from_real(bias_scale / ql.output.scale);
    if (ql.requant.saturated) qm.flags.push_back("layer " + std::to_string(k) + ": requant multiplier saturated");
    current = ql.output;
    qm.layers.push_back(std::move(ql));
    ++k;
  }
  qm.output = current;
  return qm;
}

QuantizedModel calibrate(const ArchConfig& arch, const ModelParams<float>& params,
                         std::span<const Sample> calib_samples) {
  std::vector<Tensor> inputs;
  inputs.reserve(calib_samples.size());
  for (const auto& s : calib_samples) inputs.push_back(s.input);
  return calibrate(arch, params, inputs);
}

ModelParams<double> dequantized_params(const QuantizedModel& model) {
  ModelParams<double> p = ModelParams<double>::zeros(model.arch);
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& l = model.layers[k];
    auto w = p.layers[k].weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = l.weight_scale * l.weights[i];
    auto b = p.layers[k].bias.data();
    const double bs = l.input.scale * l.weight_scale;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = bs * l.bias[i];
  }
  return p;
}

double fake_quant_logit(const QuantizedModel& model, const TensorD& sample) {
  const auto params = dequantized_params(model);
  const auto spec = model.activation_spec();
  return forward_trace(model.arch, params, sample, &spec).logit;
}

double fake_quant_forward(const QuantizedModel& model, const TensorD& sample) {
  return sigmoid(fake_quant_logit(model, sample));
}

double fake_quant_forward(const QuantizedModel& model, const Tensor& sample) {
  return fake_quant_forward(model, sample.cast<double>());
}

std::vector<std::int8_t> quantize_input(const QuantizedModel& model, const Tensor& sample) {
  if (sample.shape() != model.arch.input_shape()) {
    throw InvalidArgumentError("quantize_input: sample shape " + shape_to_string(sample.shape()) +
                               " does not match " + model.arch.name());
  }
  std::vector<std::int8_t> q;
  q.reserve(sample.size());
  for (float v : sample.data()) q.push_back(model.input.quantize(v));
  return q;
}

namespace {

std::int8_t requantize(std::int32_t acc, const QuantizedLayer& l) {
  std::int32_t v = l.requant.apply(acc) + l.output.zero_point;
  v = std::clamp(v, kQMin, kQMax);
  if (l.activation == Activation::kRelu) v = std::max(v, l.output.zero_point);
  return static_cast<std::int8_t>(v);
}

void check_accumulator(std::int64_t acc) {
  if (acc > std::numeric_limits<std::int32_t>::max() ||
      acc < std::numeric_limits<std::int32_t>::min()) {
    throw InvalidArgumentError("int_infer: accumulator overflow");
  }
}

}  // namespace

IntInferResult int_infer(const QuantizedModel& model, std::span<const std::int8_t> input) {
  const auto plan = shape_plan(model.arch);
  if (input.size() != shape_size(model.arch.input_shape())) {
    throw InvalidArgumentError("int_infer: input has " + std::to_string(input.size()) +
                               " values, " + model.arch.name() + " needs " +
                               std::to_string(shape_size(model.arch.input_shape())));
  }
  IntInferResult res;
  std::vector<std::int8_t> cur(input.begin(), input.end());
  std::vector<std::int8_t> next;
  std::size_t k = 0;
  for (const auto& layer : plan) {
    switch (layer.kind) {
      case LayerKind::kConv: {
        const auto& l = model.layers.at(k++);
        const std::size_t w = layer.input[1], cin = layer.input[2];
        const std::size_t oh = layer.output[0], ow = layer.output[1], cout = layer.output[2];
        const std::int32_t zp = l.input.zero_point;
        next.assign(oh * ow * cout, 0);
        std::vector<std::int32_t> acc(cout);
        for (std::size_t i = 0; i < oh; ++i) {
          for (std::size_t j = 0; j < ow; ++j) {
            std::copy(l.bias.begin(), l.bias.end(), acc.begin());
            for (std::size_t di = 0; di < kKernelSize; ++di) {
              for (std::size_t dj = 0; dj < kKernelSize; ++dj) {
                const std::int8_t* px = &cur[((i + di) * w + (j + dj)) * cin];
                const std::int8_t* kk = &l.weights[(di * kKernelSize + dj) * cin * cout];
                for (std::size_t c = 0; c < cin; ++c) {
                  const std::int32_t x = static_cast<std::int32_t>(px[c]) - zp;
                  const std::int8_t* krow = kk + c * cout;
                  for (std::size_t o = 0; o < cout; ++o) acc[o] += x * krow[o];
                  res.macs += cout;
                }
              }
            }
            for (std::size_t o = 0; o < cout; ++o) next[(i * ow + j) * cout + o] = requantize(acc[o], l);
          }
        }
        cur.swap(next);
        break;
      }
      case LayerKind::kMaxPool: {
        const std::size_t w = layer.input[1], c = layer.input[2];
        const std::size_t oh = layer.output[0], ow = layer.output[1];
        next.assign(oh * ow * c, 0);
        for (std::size_t i = 0; i < oh; ++i)
          for (std::size_t j = 0; j < ow; ++j)
            for (std::size_t ch = 0; ch < c; ++ch) {
              std::int8_t m = kQMin;
              for (std::size_t di = 0; di < 2; ++di)
                for (std::size_t dj = 0; dj < 2; ++dj)
                  m = std::max(m, cur[((2 * i + di) * w + (2 * j + dj)) * c + ch]);
              next[(i * ow + j) * c + ch] = m;
            }
        cur.swap(next);
        break;
      }
      case LayerKind::kFlatten:
        break;
      case LayerKind::kDense: {
        const auto& l = model.layers.at(k++);
        const std::size_t n = layer.input[0], m = layer.output[0];
        const std::int32_t zp = l.input.zero_point;
        std::vector<std::int64_t> acc(l.bias.begin(), l.bias.end());
        for (std::size_t i = 0; i < n; ++i) {
          const std::int32_t x = static_cast<std::int32_t>(cur[i]) - zp;
          const std::int8_t* row = &l.weights[i * m];
          for (std::size_t j = 0; j < m; ++j) acc[j] += x * row[j];
          res.macs += m;
        }
        next.assign(m, 0);
        for (std::size_t j = 0; j < m; ++j) {
          check_accumulator(acc[j]);
          next[j] = requantize(static_cast<std::int32_t>(acc[j]), l);
        }
        cur.swap(next);
        break;
      }
    }
  }
  res.output = cur.at(0);
  res.logit = model.output.dequantize(res.output);
  res.probability = sigmoid(res.logit);
  return res;
}

std::vector<double> predict_int8(const QuantizedModel& model, std::span<const Sample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(int_infer(model, quantize_input(model, s.input)).probability);
  return out;
}

std::vector<Tensor> calibration_inputs(std::span<const Sample> train, std::size_t count) {
  std::vector<Tensor> out;
  if (train.empty() || count == 0) return out;
  const std::size_t n = std::min(count, train.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(train[i * train.size() / n].input);
  return out;
}

TrainHooks make_qat_hooks(const ArchConfig& arch, std::vector<Tensor> calib_inputs) {
  if (calib_inputs.empty()) throw InvalidArgumentError("qat: no calibration samples");
  TrainHooks hooks;
  auto calib = std::make_shared<std::vector<Tensor>>(std::move(calib_inputs));
  hooks.activation_quantizers = [arch, calib](const ModelParams<float>& params) {
    return calibrate(arch, params, *calib).activation_spec();
  };
  hooks.effective_params = [](const ModelParams<float>& params, const FakeQuantSpec& spec) {
    ModelParams<float> eff = params;
    for (std::size_t k = 0; k < eff.layers.size(); ++k) {
      auto& l = eff.layers[k];
      const double ws = symmetric_weight_scale(l.weights.data());
      for (float& w : l.weights.data()) w = static_cast<float>(ws * quantize_weight(w, ws));
      const double in_scale = k == 0 ? spec.input.scale : spec.outputs[k - 1].scale;
      const double bs = in_scale * ws;
      for (float& b : l.bias.data()) b = static_cast<float>(bs * std::round(b / bs));
    }
    return eff;
  };
  return hooks;
}

QatResult qat_finetune(const ArchConfig& arch, const ModelParams<float>& float_params,
                       const DatasetSplit& split, const TrainConfig& config) {
  auto calib = calibration_inputs(split.train);
  const auto hooks = make_qat_hooks(arch, calib);
  auto fitted = fit(arch, float_params, split, config, &hooks);
  QatResult out;
  out.model = calibrate(arch, fitted.params, calib);
  out.params = std::move(fitted.params);
  out.report = std::move(fitted.report);
  return out;
}

}  // namespace irdist
