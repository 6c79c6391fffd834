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

#ifndef IRDIST_NN_HPP_
#define IRDIST_NN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "irdist/arch.hpp"
#include "irdist/data.hpp"
#include "irdist/metrics.hpp"
#include "irdist/quant_params.hpp"
#include "irdist/rng.hpp"
#include "irdist/tensor.hpp"

namespace irdist {

template <typename T>
struct LayerParams {
  BasicTensor<T> weights;  // conv: (3,3,cin,cout); dense: (n,m)
  BasicTensor<T> bias;

  bool operator==(const LayerParams&) const = default;
};

// One block per conv/dense layer of shape_plan(arch), in order.
template <typename T>
struct ModelParams {
  std::vector<LayerParams<T>> layers;

  std::size_t size() const;
  static ModelParams zeros(const ArchConfig& arch);

  // Calls f(span) for every weight then bias block, in layer order.
  template <typename F>
  void for_each_block(F&& f) {
    for (auto& l : layers) {
      f(l.weights.data());
      f(l.bias.data());
    }
  }
  template <typename F>
  void for_each_block(F&& f) const {
    for (const auto& l : layers) {
      f(l.weights.data());
      f(l.bias.data());
    }
  }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    for (const auto& l : layers) out.layers.push_back({l.weights.template cast<U>(), l.bias.template cast<U>()});
    return out;
  }

  bool operator==(const ModelParams&) const = default;
};

// Throws InvalidArgumentError unless every block has the shape the arch
// implies.
template <typename T>
void check_params(const ArchConfig& arch, const ModelParams<T>& params);

// He-uniform for ReLU layers, Glorot-uniform for the sigmoid output layer,
// zero biases.
template <typename T>
ModelParams<T> init_params(const ArchConfig& arch, Rng& rng);

inline constexpr double kProbabilityEpsilon = 1e-7;

// -[w_pos*y*log p + w_neg*(1-y)*log(1-p)] with p clamped to [eps, 1-eps].
template <typename T>
T weighted_bce(T p, bool label, ClassWeights weights);

// Intermediate values of one forward pass, kept for backward.
template <typename T>
struct ForwardTrace {
  std::vector<BasicTensor<T>> outputs;  // output of each plan layer
  // Per conv/dense layer: 1 where the gradient passes the activation (and
  // the fake-quant clip range when enabled).
  std::vector<std::vector<std::uint8_t>> pass;
  std::vector<std::vector<std::size_t>> pool_argmax;
  BasicTensor<T> input;  // possibly fake-quantized
  T logit{};
  T probability{};
};

template <typename T>
T forward(const ArchConfig& arch, const ModelParams<T>& params, const BasicTensor<T>& sample);

template <typename T>
ForwardTrace<T> forward_trace(const ArchConfig& arch, const ModelParams<T>& params,
                              const BasicTensor<T>& sample,
                              const FakeQuantSpec* fake_quant = nullptr);

// Fingerprint of every ReLU on/off state and pooling winner. Two passes
// with equal signatures lie in the same linear region of the network.
template <typename T>
std::uint64_t activation_signature(const ForwardTrace<T>& trace);

template <typename T>
struct BatchItem {
  const BasicTensor<T>* input;
  bool label;
};

template <typename T>
struct LossAndGrad {
  T loss{};  // mean weighted BCE
  ModelParams<T> grad;
};

// Gradient of the mean weighted BCE over the batch. With fake_quant the
// activation rounding uses a straight-through estimator.
template <typename T>
LossAndGrad<T> backward(const ArchConfig& arch, const ModelParams<T>& params,
                        std::span<const BatchItem<T>> batch, ClassWeights weights,
                        const FakeQuantSpec* fake_quant = nullptr);

template <typename T>
T batch_loss(const ArchConfig& arch, const ModelParams<T>& params,
             std::span<const BatchItem<T>> batch, ClassWeights weights,
             const FakeQuantSpec* fake_quant = nullptr);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

template <typename T>
struct AdamState {
  ModelParams<T> m;
  ModelParams<T> v;
  std::uint64_t step = 0;

  static AdamState like(const ModelParams<T>& params);
};

template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state,
               double lr, const AdamConfig& config = {});

// Multiplies the LR by `factor` after `patience` consecutive epochs without
// an improvement of at least min_delta; never below min_lr.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, double factor, int patience, double min_delta,
                   double min_lr);

  // Returns true when this call reduced the LR.
  bool step(double monitored);
  double lr() const { return lr_; }

 private:
  double lr_, factor_, min_delta_, min_lr_;
  int patience_;
  int wait_ = 0;
  double best_;
};

class EarlyStopping {
 public:
  EarlyStopping(int patience, double min_delta);

  // Returns true if `monitored` is a new best.
  bool update(double monitored);
  bool should_stop() const { return wait_ >= patience_; }
  double best() const { return best_; }

 private:
  int patience_;
  double min_delta_;
  int wait_ = 0;
  double best_;
};

struct TrainConfig {
  int max_epochs = 500;
  int early_stop_patience = 10;
  double initial_lr = 1e-3;
  double plateau_factor = 0.3;
  int plateau_patience = 5;
  double min_delta = 1e-4;
  double min_lr = 1e-6;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  AdamConfig adam;

  void validate() const;
};

struct TrainReport {
  int epochs_run = 0;
  int best_epoch = 0;  // 1-based
  double best_val_loss = 0.0;
  bool stopped_early = false;
  std::vector<double> lr_history;  // LR used during each epoch
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  double final_lr = 0.0;
  MetricBundle val_metrics;
};

// Customisation points used by quantization-aware training.
struct TrainHooks {
  // Called at the start of every epoch (and before the final evaluation)
  // with the current master parameters.
  std::function<FakeQuantSpec(const ModelParams<float>&)> activation_quantizers;
  // Maps master parameters to the parameters seen by the forward pass.
  std::function<ModelParams<float>(const ModelParams<float>&, const FakeQuantSpec&)> effective_params;
};

struct TrainResult {
  ModelParams<float> params;
  TrainReport report;
};

// Monitors validation loss (train loss if the split has no validation
// samples) and returns the best-epoch parameters, not the last ones.
TrainResult fit(const ArchConfig& arch, ModelParams<float> initial, const DatasetSplit& split,
                const TrainConfig& config, const TrainHooks* hooks = nullptr);

TrainResult train(const ArchConfig& arch, const DatasetSplit& split, const TrainConfig& config);

// Probabilities of the float model over a sample set.
std::vector<double> predict(const ArchConfig& arch, const ModelParams<float>& params,
                            std::span<const Sample> samples,
                            const FakeQuantSpec* fake_quant = nullptr);

std::vector<std::uint8_t> labels_of(std::span<const Sample> samples);

}  // namespace irdist

#endif  // IRDIST_NN_HPP_
