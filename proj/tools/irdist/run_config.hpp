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

#ifndef IRDIST_TOOLS_RUN_CONFIG_HPP_
#define IRDIST_TOOLS_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "irdist/baseline.hpp"
#include "irdist/data.hpp"
#include "irdist/geometry.hpp"
#include "irdist/nn.hpp"

namespace irdist::cli {

inline constexpr const char* kOutRootEnv = "IRDIST_OUT_ROOT";
inline constexpr std::uint64_t kDefaultSynthSeed = 42;

// Fully resolved settings for one command invocation. Built from defaults,
// then the --config file, then command-line flags, in that order.
struct RunConfig {
  std::vector<std::filesystem::path> data;
  bool synthetic = false;  // use the built-in generator instead of files
  std::uint64_t synth_seed = kDefaultSynthSeed;
  ColumnMapping columns;
  SplitSpec split;
  TrainConfig train;
  std::string grid = "small";
  std::vector<std::uint64_t> seeds{0, 1};
  std::filesystem::path out;
  std::size_t workers = 1;
  std::optional<std::string> variant;  // "single" or "window8"
  std::optional<std::string> arch;
  bool qat = true;
  BaselineConfig baseline;
  MountSpec mount;

  std::string to_json() const;
};

// Applies a structured-text config (JSON) on top of `cfg`. Unknown keys and
// wrong types raise ConfigError naming the offending key.
void apply_config_text(RunConfig& cfg, const std::string& text);

std::set<int> parse_sessions(const std::string& text, const std::string& key);
std::vector<std::uint64_t> parse_seeds(const std::string& text, const std::string& key);
SampleVariant parse_variant(const std::string& text, const std::string& key);

// Output directory for `command` when --out is absent:
// $IRDIST_OUT_ROOT/<command>, else ./irdist_out/<command>.
std::filesystem::path default_out_dir(const std::string& command);

}  // namespace irdist::cli

#endif  // IRDIST_TOOLS_RUN_CONFIG_HPP_
