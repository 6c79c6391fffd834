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

#include "irdist/arch.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "irdist/error.hpp"

namespace irdist {

namespace {

bool allowed_channel(int c) {
  return std::find(std::begin(kAllowedChannels), std::end(kAllowedChannels), c) !=
         std::end(kAllowedChannels);
}

std::vector<std::string_view> split_dash(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find('-', start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::string ArchConfig::name() const {
  std::string out = variant == InputVariant::kSingle ? "1F" : "8F";
  for (int c : conv_channels) out += "-C" + std::to_string(c);
  if (use_pool) out += "-P";
  for (int i = 0; i < fc_layers; ++i) out += "-FC";
  return out;
}

ArchConfig ArchConfig::parse(std::string_view name) {
  const auto bad = [&](const std::string& why) {
    return InvalidArgumentError("arch '" + std::string(name) + "': " + why);
  };
  const auto parts = split_dash(name);
  std::size_t i = 0;
  ArchConfig arch;
  arch.conv_channels.clear();
  arch.use_pool = false;
  arch.fc_layers = 0;

  if (parts.empty()) throw bad("empty");
  if (parts[i] == "1F") {
    arch.variant = InputVariant::kSingle;
  } else if (parts[i] == "8F") {
    arch.variant = InputVariant::kWindowed;
  } else {
    throw bad("input must be 1F or 8F");
  }
  ++i;
  while (i < parts.size() && !parts[i].empty() && parts[i][0] == 'C') {
    int c = 0;
    const auto tok = parts[i].substr(1);
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), c);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) throw bad("bad conv token");
    arch.conv_channels.push_back(c);
    ++i;
  }
  if (i < parts.size() && parts[i] == "P") {
    arch.use_pool = true;
    ++i;
  }
  while (i < parts.size() && parts[i] == "FC") {
    ++arch.fc_layers;
    ++i;
  }
  if (i != parts.size()) throw bad("unexpected token '" + std::string(parts[i]) + "'");
  arch.validate();
  return arch;
}

void ArchConfig::validate() const {
  if (conv_channels.empty() || conv_channels.size() > 2) {
    throw InvalidArgumentError("arch: need 1 or 2 conv layers");
  }
  for (int c : conv_channels) {
    if (!allowed_channel(c)) {
      throw InvalidArgumentError("arch: channel count " + std::to_string(c) +
                                 " not in {8,16,32,64}");
    }
  }
  if (fc_layers < 1 || fc_layers > 2) {
    throw InvalidArgumentError("arch: need 1 or 2 FC layers");
  }
}

std::size_t LayerPlan::weight_count() const {
  switch (kind) {
    case LayerKind::kConv:
      return kKernelSize * kKernelSize * input[2] * output[2];
    case LayerKind::kDense:
      return input[0] * output[0];
    default:
      return 0;
  }
}

std::size_t LayerPlan::bias_count() const {
  switch (kind) {
    case LayerKind::kConv: return output[2];
    case LayerKind::kDense: return output[0];
    default: return 0;
  }
}

std::uint64_t LayerPlan::macs() const {
  switch (kind) {
    case LayerKind::kConv:
      return conv2d_valid_macs(input[0], input[1], input[2], output[2]);
    case LayerKind::kDense:
      return dense_macs(input[0], output[0]);
    default:
      return 0;
  }
}

std::vector<LayerPlan> shape_plan(const ArchConfig& arch) {
  arch.validate();
  std::vector<LayerPlan> plan;
  Shape cur = arch.input_shape();
  for (int c : arch.conv_channels) {
    if (cur[0] < kKernelSize || cur[1] < kKernelSize) {
      throw InvalidArgumentError("arch " + arch.name() + ": spatial underflow at conv");
    }
    Shape next{cur[0] - 2, cur[1] - 2, static_cast<std::size_t>(c)};
    plan.push_back({LayerKind::kConv, Activation::kRelu, cur, next});
    cur = next;
  }
  if (arch.use_pool) {
    if (cur[0] < 2 || cur[1] < 2) {
      throw InvalidArgumentError("arch " + arch.name() + ": spatial underflow at pool");
    }
    Shape next{cur[0] / 2, cur[1] / 2, cur[2]};
    plan.push_back({LayerKind::kMaxPool, Activation::kNone, cur, next});
    cur = next;
  }
  const Shape flat{shape_size(cur)};
  plan.push_back({LayerKind::kFlatten, Activation::kNone, cur, flat});
  cur = flat;
  if (arch.fc_layers == 2) {
    Shape next{kHiddenSize};
    plan.push_back({LayerKind::kDense, Activation::kRelu, cur, next});
    cur = next;
  }
  plan.push_back({LayerKind::kDense, Activation::kSigmoid, cur, Shape{1}});
  return plan;
}

std::size_t param_count(const ArchConfig& arch) {
  std::size_t n = 0;
  for (const auto& l : shape_plan(arch)) n += l.weight_count() + l.bias_count();
  return n;
}

std::uint64_t mac_count(const ArchConfig& arch) {
  std::uint64_t n = 0;
  for (const auto& l : shape_plan(arch)) n += l.macs();
  return n;
}

std::size_t quantized_size_bytes(const ArchConfig& arch) {
  std::size_t n = 0;
  for (const auto& l : shape_plan(arch)) n += l.weight_count() + 4 * l.bias_count();
  return n;
}

std::string format_kbytes(std::size_t bytes) {
  const double k = static_cast<double>(bytes) / 1024.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, k < 1.0 ? "%.2fk" : "%.1fk", k);
  return buf;
}

std::string format_kmacs(std::uint64_t macs) {
  const double k = static_cast<double>(macs) / 1000.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, k < 100.0 ? "%.1fk" : "%.0fk", k);
  return buf;
}

std::vector<ArchConfig> make_grid(const GridSpec& spec) {
  std::vector<ArchConfig> grid;
  std::set<std::string> seen;
  const auto emit = [&](ArchConfig arch) {
    try {
      shape_plan(arch);
    } catch (const InvalidArgumentError&) {
      return;
    }
    if (seen.insert(arch.name()).second) grid.push_back(std::move(arch));
  };
  std::vector<std::vector<int>> stacks;
  if (spec.one_conv) {
    for (int c : spec.channels) stacks.push_back({c});
  }
  if (spec.two_conv) {
    for (int c1 : spec.channels) {
      if (!spec.two_conv_first_channels.empty() &&
          std::find(spec.two_conv_first_channels.begin(),
                    spec.two_conv_first_channels.end(),
                    c1) == spec.two_conv_first_channels.end()) {
        continue;
      }
      for (int c2 : spec.channels) stacks.push_back({c1, c2});
    }
  }
  for (InputVariant v : spec.variants) {
    for (const auto& stack : stacks) {
      for (bool pool : spec.pool) {
        for (int fc : spec.fc_layers) {
          emit(ArchConfig{v, stack, pool, fc});
        }
      }
    }
  }
  return grid;
}

std::vector<ArchConfig> default_grid() { return make_grid(GridSpec{}); }

std::vector<ArchConfig> paper96_grid() {
  GridSpec spec;
  spec.two_conv_first_channels = {8, 16};
  return make_grid(spec);
}

std::vector<ArchConfig> small_grid() {
  return {ArchConfig::parse("1F-C8-P-FC"), ArchConfig::parse("1F-C8-P-FC-FC"),
          ArchConfig::parse("1F-C16-C8-P-FC"), ArchConfig::parse("8F-C8-P-FC-FC")};
}

std::vector<ArchConfig> grid_from_preset(std::string_view preset) {
  if (preset == "default" || preset == "full") return default_grid();
  if (preset == "paper96") return paper96_grid();
  if (preset == "small") return small_grid();
  std::vector<ArchConfig> out;
  std::size_t start = 0;
  while (start <= preset.size()) {
    const std::size_t pos = preset.find(',', start);
    const auto tok = preset.substr(start, pos == std::string_view::npos
                                              ? std::string_view::npos
                                              : pos - start);
    if (!tok.empty()) out.push_back(ArchConfig::parse(tok));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (out.empty()) throw InvalidArgumentError("grid: empty preset");
  return out;
}

}  // namespace irdist
