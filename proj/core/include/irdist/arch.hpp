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

#ifndef IRDIST_ARCH_HPP_
#define IRDIST_ARCH_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "irdist/tensor.hpp"

namespace irdist {

inline constexpr std::size_t kFrameSide = 8;
inline constexpr std::size_t kDefaultWindow = 8;
inline constexpr std::size_t kHiddenSize = 64;
inline constexpr int kAllowedChannels[] = {8, 16, 32, 64};

enum class InputVariant { kSingle, kWindowed };

// One member of the CNN template family:
//   input -> Conv[-Conv] (ReLU) -> [MaxPool] -> flatten -> [FC64 (ReLU)] -> FC1 (sigmoid)
//
// Canonical name grammar (see docs/arch_grammar.md):
//   name    := input "-" conv ["-" conv] ["-P"] "-FC" ["-FC"]
//   input   := "1F" | "8F"
//   conv    := "C" ("8" | "16" | "32" | "64")
struct ArchConfig {
  InputVariant variant = InputVariant::kSingle;
  std::vector<int> conv_channels{8};
  bool use_pool = true;
  int fc_layers = 1;

  std::size_t input_channels() const {
    return variant == InputVariant::kSingle ? 1 : kDefaultWindow;
  }
  Shape input_shape() const { return {kFrameSide, kFrameSide, input_channels()}; }

  std::string name() const;
  static ArchConfig parse(std::string_view name);

  // Throws InvalidArgumentError if the config is outside the family.
  void validate() const;

  bool operator==(const ArchConfig&) const = default;
};

enum class LayerKind { kConv, kMaxPool, kFlatten, kDense };
enum class Activation { kNone, kRelu, kSigmoid };

struct LayerPlan {
  LayerKind kind;
  Activation activation = Activation::kNone;
  Shape input;
  Shape output;

  // Parameter blocks; zero for parameterless layers.
  std::size_t weight_count() const;
  std::size_t bias_count() const;
  std::uint64_t macs() const;
  bool has_params() const { return kind == LayerKind::kConv || kind == LayerKind::kDense; }
};

// Layer-by-layer shapes. Throws InvalidArgumentError on spatial underflow.
std::vector<LayerPlan> shape_plan(const ArchConfig& arch);

std::size_t param_count(const ArchConfig& arch);
std::uint64_t mac_count(const ArchConfig& arch);
// 1 byte per weight, 4 bytes per (int32) bias.
std::size_t quantized_size_bytes(const ArchConfig& arch);

// Table-style "k" display. Bytes use KiB (value/1024, two decimals below 1k,
// one decimal otherwise); MACs use thousands with one decimal below 100k and
// none above.
std::string format_kbytes(std::size_t bytes);
std::string format_kmacs(std::uint64_t macs);

struct GridSpec {
  std::vector<InputVariant> variants{InputVariant::kSingle, InputVariant::kWindowed};
  std::vector<int> channels{8, 16, 32, 64};
  bool one_conv = true;
  bool two_conv = true;
  // When non-empty, restricts the first channel of two-conv stacks.
  std::vector<int> two_conv_first_channels;
  std::vector<bool> pool{true, false};
  std::vector<int> fc_layers{1, 2};
};

// Full cross product of the spec, dropping invalid configs and duplicates.
std::vector<ArchConfig> make_grid(const GridSpec& spec);

// Every combination of the template factors: 160 configs.
std::vector<ArchConfig> default_grid();

// 96-config approximation of the published sweep: two-conv stacks restricted
// to a first layer of 8 or 16 channels. The original decomposition is not
// recoverable; this preset only matches its size.
std::vector<ArchConfig> paper96_grid();

// Small grid for smoke tests and the synthetic sweep preset.
std::vector<ArchConfig> small_grid();

// "default", "paper96", "small", or a comma-separated list of names.
std::vector<ArchConfig> grid_from_preset(std::string_view preset);

}  // namespace irdist

#endif  // IRDIST_ARCH_HPP_
