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

#include "irdist/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "irdist/error.hpp"

namespace irdist {

namespace {

template <typename T>
const BasicTensor<T>& layer_input(const ForwardTrace<T>& trace, std::size_t layer) {
  return layer == 0 ? trace.input : trace.outputs[layer - 1];
}

// Applies the layer activation (and optional fake quantization) in place,
// filling the straight-through mask.
template <typename T>
void activate(BasicTensor<T>& z, Activation act, const QuantParams* fq,
              std::vector<std::uint8_t>& pass) {
  pass.assign(z.size(), 1);
  for (std::size_t i = 0; i < z.size(); ++i) {
    T v = z[i];
    if (act == Activation::kRelu) {
      if (!(v > T{0})) {
        v = T{0};
        pass[i] = 0;
      }
    }
    if (fq) {
      if (v < static_cast<T>(fq->real_min()) || v > static_cast<T>(fq->real_max())) pass[i] = 0;
      v = static_cast<T>(fq->fake_quantize(static_cast<double>(v)));
    }
    z[i] = v;
  }
}

template <typename T>
ForwardTrace<T> run_forward(const std::vector<LayerPlan>& plan, const ModelParams<T>& params,
                            const BasicTensor<T>& sample, const FakeQuantSpec* fq) {
  ForwardTrace<T> trace;
  trace.input = sample;
  if (fq) {
    for (T& v : trace.input.data()) v = static_cast<T>(fq->input.fake_quantize(static_cast<double>(v)));
  }
  trace.outputs.reserve(plan.size());
  trace.pool_argmax.resize(plan.size());
  std::size_t k = 0;
  for (std::size_t l = 0; l < plan.size(); ++l) {
    const LayerPlan& layer = plan[l];
    const BasicTensor<T>& in = layer_input(trace, l);
    const QuantParams* out_q = nullptr;
    switch (layer.kind) {
      case LayerKind::kConv:
      case LayerKind::kDense: {
        const auto& p = params.layers.at(k);
        BasicTensor<T> z = layer.kind == LayerKind::kConv ? conv2d_valid(in, p.weights, p.bias)
                                                          : dense(in, p.weights, p.bias);
        if (fq) out_q = &fq->outputs.at(k);
        trace.pass.emplace_back();
        activate(z, layer.activation == Activation::kRelu ? Activation::kRelu : Activation::kNone,
                 out_q, trace.pass.back());
        if (layer.activation == Activation::kSigmoid) {
          trace.logit = z[0];
          trace.probability = sigmoid(z[0]);
        }
        trace.outputs.push_back(std::move(z));
        ++k;
        break;
      }
      case LayerKind::kMaxPool:
        trace.outputs.push_back(maxpool2x2(in, trace.pool_argmax[l]));
        break;
      case LayerKind::kFlatten:
        trace.outputs.push_back(in.reshaped(layer.output));
        break;
    }
  }
  return trace;
}

template <typename T>
void check_sample(const ArchConfig& arch, const BasicTensor<T>& sample) {
  if (sample.shape() != arch.input_shape()) {
    throw InvalidArgumentError("forward: sample shape " + shape_to_string(sample.shape()) +
                               " does not match " + arch.name() + " input " +
                               shape_to_string(arch.input_shape()));
  }
}

template <typename T>
T logit_gradient(T probability, bool label, ClassWeights w) {
  const T eps = static_cast<T>(kProbabilityEpsilon);
  if (probability < eps || probability > T{1} - eps) return T{0};
  return label ? static_cast<T>(w.positive) * (probability - T{1})
               : static_cast<T>(w.negative) * probability;
}

// Accumulates scale * dLoss/dparams of one sample into grad.
template <typename T>
void backprop_sample(const std::vector<LayerPlan>& plan, const ModelParams<T>& params,
                     const ForwardTrace<T>& trace, T dlogit, ModelParams<T>& grad) {
  BasicTensor<T> g({1}, dlogit);
  std::size_t k = params.layers.size();
  for (std::size_t l = plan.size(); l-- > 0;) {
    const LayerPlan& layer = plan[l];
    const BasicTensor<T>& in = layer_input(trace, l);
    switch (layer.kind) {
      case LayerKind::kDense: {
        --k;
        const auto& mask = trace.pass[k];
        for (std::size_t j = 0; j < g.size(); ++j) {
          if (!mask[j]) g[j] = T{0};
        }
        const std::size_t n = layer.input[0], m = layer.output[0];
        auto& dw = grad.layers[k].weights;
        auto& db = grad.layers[k].bias;
        for (std::size_t j = 0; j < m; ++j) db[j] += g[j];
        for (std::size_t i = 0; i < n; ++i) {
          const T x = in[i];
          if (x == T{0}) continue;
          T* row = &dw[i * m];
          for (std::size_t j = 0; j < m; ++j) row[j] += x * g[j];
        }
        if (l > 0) {
          BasicTensor<T> gin({n});
          const auto& w = params.layers[k].weights;
          for (std::size_t i = 0; i < n; ++i) {
            const T* row = &w[i * m];
            T s{0};
            for (std::size_t j = 0; j < m; ++j) s += row[j] * g[j];
            gin[i] = s;
          }
          g = std::move(gin);
        }
        break;
      }
      case LayerKind::kFlatten:
        g = g.reshaped(layer.input);
        break;
      case LayerKind::kMaxPool: {
        BasicTensor<T> gin(layer.input);
        const auto& argmax = trace.pool_argmax[l];
        for (std::size_t o = 0; o < g.size(); ++o) gin[argmax[o]] += g[o];
        g = std::move(gin);
        break;
      }
      case LayerKind::kConv: {
        --k;
        const auto& mask = trace.pass[k];
        for (std::size_t j = 0; j < g.size(); ++j) {
          if (!mask[j]) g[j] = T{0};
        }
        const std::size_t w = layer.input[1], cin = layer.input[2];
        const std::size_t oh = layer.output[0], ow = layer.output[1], cout = layer.output[2];
        auto& dk = grad.layers[k].weights;
        auto& db = grad.layers[k].bias;
        const auto& kern = params.layers[k].weights;
        const bool need_input_grad = l > 0;
        BasicTensor<T> gin(need_input_grad ? layer.input : Shape{1});
        for (std::size_t i = 0; i < oh; ++i) {
          for (std::size_t j = 0; j < ow; ++j) {
            const T* go = &g[(i * ow + j) * cout];
            bool any = false;
            for (std::size_t o = 0; o < cout; ++o) {
              db[o] += go[o];
              any = any || go[o] != T{0};
            }
            if (!any) continue;
            for (std::size_t di = 0; di < kKernelSize; ++di) {
              for (std::size_t dj = 0; dj < kKernelSize; ++dj) {
                const std::size_t pix = ((i + di) * w + (j + dj)) * cin;
                const std::size_t kbase = (di * kKernelSize + dj) * cin * cout;
                for (std::size_t c = 0; c < cin; ++c) {
                  const T x = in[pix + c];
                  T* dkr = &dk[kbase + c * cout];
                  for (std::size_t o = 0; o < cout; ++o) dkr[o] += x * go[o];
                  if (need_input_grad) {
                    const T* kr = &kern[kbase + c * cout];
                    T s{0};
                    for (std::size_t o = 0; o < cout; ++o) s += kr[o] * go[o];
                    gin[pix + c] += s;
                  }
                }
              }
            }
          }
        }
        if (need_input_grad) g = std::move(gin);
        break;
      }
    }
  }
}

}  // namespace

template <typename T>
std::size_t ModelParams<T>::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ArchConfig& arch) {
  ModelParams<T> p;
  for (const auto& layer : shape_plan(arch)) {
    if (layer.kind == LayerKind::kConv) {
      p.layers.push_back({BasicTensor<T>({kKernelSize, kKernelSize, layer.input[2], layer.output[2]}),
                          BasicTensor<T>({layer.output[2]})});
    } else if (layer.kind == LayerKind::kDense) {
      p.layers.push_back({BasicTensor<T>({layer.input[0], layer.output[0]}),
                          BasicTensor<T>({layer.output[0]})});
    }
  }
  return p;
}

template <typename T>
void check_params(const ArchConfig& arch, const ModelParams<T>& params) {
  const auto expected = ModelParams<T>::zeros(arch);
  if (expected.layers.size() != params.layers.size()) {
    throw InvalidArgumentError("params: " + std::to_string(params.layers.size()) +
                               " layers, " + arch.name() + " needs " +
                               std::to_string(expected.layers.size()));
  }
  for (std::size_t i = 0; i < expected.layers.size(); ++i) {
    if (expected.layers[i].weights.shape() != params.layers[i].weights.shape() ||
        expected.layers[i].bias.shape() != params.layers[i].bias.shape()) {
      throw InvalidArgumentError("params: layer " + std::to_string(i) + " has shape " +
                                 shape_to_string(params.layers[i].weights.shape()) + " expected " +
                                 shape_to_string(expected.layers[i].weights.shape()));
    }
  }
}

template <typename T>
ModelParams<T> init_params(const ArchConfig& arch, Rng& rng) {
  auto p = ModelParams<T>::zeros(arch);
  std::size_t k = 0;
  for (const auto& layer : shape_plan(arch)) {
    if (!layer.has_params()) continue;
    double fan_in = 0, fan_out = 0;
    if (layer.kind == LayerKind::kConv) {
      fan_in = static_cast<double>(kKernelSize * kKernelSize * layer.input[2]);
      fan_out = static_cast<double>(kKernelSize * kKernelSize * layer.output[2]);
    } else {
      fan_in = static_cast<double>(layer.input[0]);
      fan_out = static_cast<double>(layer.output[0]);
    }
    const double limit = layer.activation == Activation::kSigmoid
                             ? std::sqrt(6.0 / (fan_in + fan_out))
                             : std::sqrt(6.0 / fan_in);
    for (T& w : p.layers[k].weights.data()) w = static_cast<T>(rng.uniform(-limit, limit));
    ++k;
  }
  return p;
}

template <typename T>
T weighted_bce(T p, bool label, ClassWeights weights) {
  const T eps = static_cast<T>(kProbabilityEpsilon);
  const T pc = std::clamp(p, eps, T{1} - eps);
  return label ? -static_cast<T>(weights.positive) * std::log(pc)
               : -static_cast<T>(weights.negative) * std::log(T{1} - pc);
}

template <typename T>
ForwardTrace<T> forward_trace(const ArchConfig& arch, const ModelParams<T>& params,
                              const BasicTensor<T>& sample, const FakeQuantSpec* fake_quant) {
  check_sample(arch, sample);
  return run_forward(shape_plan(arch), params, sample, fake_quant);
}

template <typename T>
T forward(const ArchConfig& arch, const ModelParams<T>& params, const BasicTensor<T>& sample) {
  return forward_trace(arch, params, sample).probability;
}

template <typename T>
std::uint64_t activation_signature(const ForwardTrace<T>& trace) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  for (const auto& mask : trace.pass) {
    for (auto m : mask) mix(m);
    mix(0xff);
  }
  for (const auto& am : trace.pool_argmax) {
    for (auto a : am) mix(a);
    mix(0xfe);
  }
  return h;
}

template <typename T>
LossAndGrad<T> backward(const ArchConfig& arch, const ModelParams<T>& params,
                        std::span<const BatchItem<T>> batch, ClassWeights weights,
                        const FakeQuantSpec* fake_quant) {
  if (batch.empty()) throw InvalidArgumentError("backward: empty batch");
  const auto plan = shape_plan(arch);
  LossAndGrad<T> out{T{0}, ModelParams<T>::zeros(arch)};
  // Sum per-sample gradients first, then scale once: the result of a batch
  // and of the same batch duplicated agree to rounding.
  for (const auto& item : batch) {
    check_sample(arch, *item.input);
    const auto trace = run_forward(plan, params, *item.input, fake_quant);
    out.loss += weighted_bce(trace.probability, item.label, weights);
    T dlogit = logit_gradient(trace.probability, item.label, weights);
    dlogit *= static_cast<T>(trace.pass.back()[0]);
    if (dlogit != T{0}) backprop_sample(plan, params, trace, dlogit, out.grad);
  }
  const T inv = T{1} / static_cast<T>(batch.size());
  out.loss *= inv;
  out.grad.for_each_block([&](std::span<T> block) {
    for (T& v : block) v *= inv;
  });
  return out;
}

template <typename T>
T batch_loss(const ArchConfig& arch, const ModelParams<T>& params,
             std::span<const BatchItem<T>> batch, ClassWeights weights,
             const FakeQuantSpec* fake_quant) {
  if (batch.empty()) throw InvalidArgumentError("batch_loss: empty batch");
  const auto plan = shape_plan(arch);
  T sum{0};
  for (const auto& item : batch) {
    check_sample(arch, *item.input);
    sum += weighted_bce(run_forward(plan, params, *item.input, fake_quant).probability, item.label,
                        weights);
  }
  return sum / static_cast<T>(batch.size());
}

template <typename T>
AdamState<T> AdamState<T>::like(const ModelParams<T>& params) {
  AdamState s;
  for (const auto& l : params.layers) {
    s.m.layers.push_back({BasicTensor<T>(l.weights.shape()), BasicTensor<T>(l.bias.shape())});
  }
  s.v = s.m;
  return s;
}

template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state, double lr,
               const AdamConfig& config) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
  const auto update = [&](std::span<T> p, std::span<const T> g, std::span<T> m, std::span<T> v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (T{1} - b1) * g[i];
      v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
      const double mhat = static_cast<double>(m[i]) / c1;
      const double vhat = static_cast<double>(v[i]) / c2;
      p[i] = static_cast<T>(static_cast<double>(p[i]) - lr * mhat / (std::sqrt(vhat) + config.epsilon));
    }
  };
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    update(params.layers[k].weights.data(), grads.layers[k].weights.data(),
           state.m.layers[k].weights.data(), state.v.layers[k].weights.data());
    update(params.layers[k].bias.data(), grads.layers[k].bias.data(),
           state.m.layers[k].bias.data(), state.v.layers[k].bias.data());
  }
}

PlateauScheduler::PlateauScheduler(double initial_lr, double factor, int patience,
                                   double min_delta, double min_lr)
    : lr_(initial_lr),
      factor_(factor),
      min_delta_(min_delta),
      min_lr_(min_lr),
      patience_(patience),
      best_(std::numeric_limits<double>::infinity()) {}

bool PlateauScheduler::step(double monitored) {
  if (monitored < best_ - min_delta_) {
    best_ = monitored;
    wait_ = 0;
    return false;
  }
  if (++wait_ >= patience_) {
    wait_ = 0;
    if (lr_ > min_lr_) {
      lr_ = std::max(lr_ * factor_, min_lr_);
      return true;
    }
  }
  return false;
}

EarlyStopping::EarlyStopping(int patience, double min_delta)
    : patience_(patience), min_delta_(min_delta), best_(std::numeric_limits<double>::infinity()) {}

bool EarlyStopping::update(double monitored) {
  if (monitored < best_ - min_delta_) {
    best_ = monitored;
    wait_ = 0;
    return true;
  }
  ++wait_;
  return false;
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw ConfigError("train.max_epochs", "must be >= 1");
  if (early_stop_patience < 1) throw ConfigError("train.early_stop_patience", "must be >= 1");
  if (plateau_patience < 1) throw ConfigError("train.plateau_patience", "must be >= 1");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) {
    throw ConfigError("train.plateau_factor", "must be in (0, 1)");
  }
  if (!(initial_lr > 0.0)) throw ConfigError("train.initial_lr", "must be > 0");
  if (min_lr < 0.0) throw ConfigError("train.min_lr", "must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
}

std::vector<std::uint8_t> labels_of(std::span<const Sample> samples) {
  std::vector<std::uint8_t> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label ? 1 : 0);
  return out;
}

std::vector<double> predict(const ArchConfig& arch, const ModelParams<float>& params,
                            std::span<const Sample> samples, const FakeQuantSpec* fake_quant) {
  const auto plan = shape_plan(arch);
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    check_sample(arch, s.input);
    out.push_back(run_forward(plan, params, s.input, fake_quant).probability);
  }
  return out;
}

namespace {

std::vector<BatchItem<float>> items_of(std::span<const Sample> samples) {
  std::vector<BatchItem<float>> items;
  items.reserve(samples.size());
  for (const auto& s : samples) items.push_back({&s.input, s.label});
  return items;
}

}  // namespace

TrainResult fit(const ArchConfig& arch, ModelParams<float> initial, const DatasetSplit& split,
                const TrainConfig& config, const TrainHooks* hooks) {
  config.validate();
  if (split.train.empty()) throw InvalidArgumentError("train: empty training split");
  check_params(arch, initial);

  Rng shuffle_rng = Rng(config.seed).split("shuffle");
  const auto train_items = items_of(split.train);
  const auto val_items = items_of(split.val);

  PlateauScheduler scheduler(config.initial_lr, config.plateau_factor, config.plateau_patience,
                             config.min_delta, config.min_lr);
  EarlyStopping stopper(config.early_stop_patience, config.min_delta);

  ModelParams<float> params = std::move(initial);
  ModelParams<float> best = params;
  AdamState<float> adam = AdamState<float>::like(params);
  TrainReport report;

  std::vector<std::size_t> order(train_items.size());
  std::vector<BatchItem<float>> batch;
  batch.reserve(config.batch_size);

  const auto effective = [&](const ModelParams<float>& p, const FakeQuantSpec* fq) {
    return hooks && fq ? hooks->effective_params(p, *fq) : p;
  };

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::optional<FakeQuantSpec> fq;
    if (hooks) fq = hooks->activation_quantizers(params);
    const FakeQuantSpec* fqp = fq ? &*fq : nullptr;

    const double lr = scheduler.lr();
    report.lr_history.push_back(lr);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_items[order[i]]);
      const auto eff = effective(params, fqp);
      const auto lg = backward<float>(arch, eff, batch, split.weights, fqp);
      adam_step(params, lg.grad, adam, lr, config.adam);
      loss_sum += static_cast<double>(lg.loss) * static_cast<double>(batch.size());
    }
    const double train_loss = loss_sum / static_cast<double>(order.size());
    report.train_loss.push_back(train_loss);

    double monitored = train_loss;
    if (!val_items.empty()) {
      monitored = batch_loss<float>(arch, effective(params, fqp), val_items, split.weights, fqp);
    }
    report.val_loss.push_back(monitored);
    report.epochs_run = epoch;

    if (stopper.update(monitored)) {
      best = params;
      report.best_epoch = epoch;
      report.best_val_loss = monitored;
    }
    scheduler.step(monitored);
    if (stopper.should_stop()) {
      report.stopped_early = true;
      break;
    }
  }
  report.final_lr = scheduler.lr();

  std::optional<FakeQuantSpec> final_fq;
  if (hooks) final_fq = hooks->activation_quantizers(best);
  const FakeQuantSpec* ffq = final_fq ? &*final_fq : nullptr;
  if (!split.val.empty()) {
    const auto scores = predict(arch, effective(best, ffq), split.val, ffq);
    report.val_metrics = evaluate_scores(scores, labels_of(split.val));
  }
  return {std::move(best), std::move(report)};
}

TrainResult train(const ArchConfig& arch, const DatasetSplit& split, const TrainConfig& config) {
  Rng init_rng = Rng(config.seed).split("init");
  return fit(arch, init_params<float>(arch, init_rng), split, config);
}

#define IRDIST_INSTANTIATE(T)                                                                   \
  template struct ModelParams<T>;                                                               \
  template struct AdamState<T>;                                                                 \
  template void check_params(const ArchConfig&, const ModelParams<T>&);                         \
  template ModelParams<T> init_params<T>(const ArchConfig&, Rng&);                              \
  template T weighted_bce(T, bool, ClassWeights);                                               \
  template T forward(const ArchConfig&, const ModelParams<T>&, const BasicTensor<T>&);          \
  template ForwardTrace<T> forward_trace(const ArchConfig&, const ModelParams<T>&,              \
                                         const BasicTensor<T>&, const FakeQuantSpec*);          \
  template std::uint64_t activation_signature(const ForwardTrace<T>&);                          \
  template LossAndGrad<T> backward(const ArchConfig&, const ModelParams<T>&,                    \
                                   std::span<const BatchItem<T>>, ClassWeights,                 \
                                   const FakeQuantSpec*);                                       \
  template T batch_loss(const ArchConfig&, const ModelParams<T>&,                               \
                        std::span<const BatchItem<T>>, ClassWeights, const FakeQuantSpec*);     \
  template void adam_step(ModelParams<T>&, const ModelParams<T>&, AdamState<T>&, double,        \
                          const AdamConfig&);

IRDIST_INSTANTIATE(float)
IRDIST_INSTANTIATE(double)

#undef IRDIST_INSTANTIATE

}  // namespace irdist
