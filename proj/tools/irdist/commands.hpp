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

#ifndef IRDIST_TOOLS_COMMANDS_HPP_
#define IRDIST_TOOLS_COMMANDS_HPP_

#include <filesystem>
#include <optional>
#include <string>

#include "run_config.hpp"

namespace irdist::cli {

// Per-command options that are not part of RunConfig.
struct CommandOptions {
  bool overwrite = false;
  std::optional<std::filesystem::path> model;    // quantize, eval, export
  std::optional<std::filesystem::path> results;  // pareto
  std::string symbol = "irdist_model";           // export
  double distance_rule = 2.0;                    // geometry
  bool out_given = false;
};

int cmd_synth(const RunConfig& cfg, const CommandOptions& opt);
int cmd_data_stats(const RunConfig& cfg, const CommandOptions& opt);
int cmd_train(const RunConfig& cfg, const CommandOptions& opt);
int cmd_quantize(const RunConfig& cfg, const CommandOptions& opt);
int cmd_eval(const RunConfig& cfg, const CommandOptions& opt);
int cmd_baseline(const RunConfig& cfg, const CommandOptions& opt);
int cmd_export(const RunConfig& cfg, const CommandOptions& opt);
int cmd_sweep(const RunConfig& cfg, const CommandOptions& opt);
int cmd_pareto(const RunConfig& cfg, const CommandOptions& opt);
int cmd_geometry(const RunConfig& cfg, const CommandOptions& opt);

}  // namespace irdist::cli

#endif  // IRDIST_TOOLS_COMMANDS_HPP_
