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

#include <CLI11.hpp>
#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "commands.hpp"
#include "irdist/error.hpp"
#include "irdist/io.hpp"
#include "run_config.hpp"

namespace {

using namespace irdist;
using namespace irdist::cli;

// Exit codes by error category.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kInvalidArgument = 3,
  kIo = 4,
  kBadInput = 5,
  kUndefinedMetric = 6,
};

// Raw flag values; only flags given on the command line override the config.
struct Flags {
  std::optional<std::string> config;
  std::vector<std::string> data;
  bool synthetic = false;
  std::optional<std::uint64_t> synth_seed;
  std::optional<std::string> sessions_train, sessions_test;
  std::optional<double> val_fraction;
  std::optional<std::string> variant, arch, seeds, grid;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  std::optional<int> max_epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::uint64_t> seed;
  bool no_qat = false;
  std::optional<std::size_t> bg_window, min_area;
  std::optional<double> delta, height, head_height, angle;
  CommandOptions cmd;
  std::string model, results;
};

void add_data_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--data", f.data, "Dataset CSV, .irds cache, or manifest .json (repeatable)");
  sub->add_flag("--synthetic", f.synthetic, "Use the built-in synthetic dataset");
  sub->add_option("--synth-seed", f.synth_seed, "Seed of the synthetic dataset (default 42)");
}

void add_split_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--sessions-train", f.sessions_train, "Training sessions, e.g. 1 or 1,3");
  sub->add_option("--sessions-test", f.sessions_test, "Test sessions, e.g. 2-6");
  sub->add_option("--val-fraction", f.val_fraction, "Chronological validation tail (default 0.2)");
}

void add_train_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--max-epochs", f.max_epochs, "Epoch cap (default 500)");
  sub->add_option("--batch-size", f.batch_size, "Mini-batch size (default 32)");
}

void add_out_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--out", f.out, "Output directory (default $IRDIST_OUT_ROOT/<command>)");
  sub->add_flag("--overwrite", f.cmd.overwrite, "Replace existing outputs instead of skipping");
}

RunConfig resolve(const Flags& f) {
  RunConfig cfg;
  if (f.config) apply_config_text(cfg, read_text_file(*f.config));
  if (!f.data.empty()) {
    cfg.data.assign(f.data.begin(), f.data.end());
    cfg.synthetic = false;
  }
  if (f.synthetic) cfg.synthetic = true;
  if (f.synth_seed) cfg.synth_seed = *f.synth_seed;
  if (f.sessions_train) cfg.split.train_sessions = parse_sessions(*f.sessions_train, "sessions-train");
  if (f.sessions_test) cfg.split.test_sessions = parse_sessions(*f.sessions_test, "sessions-test");
  if (f.val_fraction) cfg.split.val_fraction = *f.val_fraction;
  if (f.variant) {
    parse_variant(*f.variant, "variant");
    cfg.variant = f.variant;
  }
  if (f.arch) cfg.arch = f.arch;
  if (f.grid) cfg.grid = *f.grid;
  if (f.seeds) cfg.seeds = parse_seeds(*f.seeds, "seeds");
  if (f.workers) cfg.workers = *f.workers;
  if (f.out) cfg.out = *f.out;
  if (f.max_epochs) cfg.train.max_epochs = *f.max_epochs;
  if (f.batch_size) cfg.train.batch_size = *f.batch_size;
  if (f.seed) cfg.train.seed = *f.seed;
  if (f.no_qat) cfg.qat = false;
  if (f.bg_window) cfg.baseline.bg_window = *f.bg_window;
  if (f.min_area) cfg.baseline.min_blob_area = *f.min_area;
  if (f.delta) cfg.baseline.delta_threshold = *f.delta;
  if (f.height) cfg.mount.sensor_height = *f.height;
  if (f.head_height) cfg.mount.min_head_height = *f.head_height;
  if (f.angle) cfg.mount.view_angle = *f.angle;

  try {
    cfg.split.validate();
  } catch (const Error& e) {
    throw ConfigError("split", e.what());
  }
  try {
    cfg.train.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("train", e.what());
  }
  if (cfg.seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  if (cfg.workers == 0) throw ConfigError("workers", "workers must be at least 1");
  return cfg;
}

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::kConfig: return kUsage;
    case ErrorCategory::kInvalidArgument: return kInvalidArgument;
    case ErrorCategory::kIo: return kIo;
    case ErrorCategory::kParse:
    case ErrorCategory::kFormat: return kBadInput;
    case ErrorCategory::kUndefinedMetric: return kUndefinedMetric;
  }
  return kInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"irdist: tiny CNNs for social-distance monitoring on 8x8 IR arrays"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "irdist 0.1.0");
  Flags f;
  app.add_option("--config", f.config, "JSON run config; flags override its values");

  using Command = std::function<int(const RunConfig&, const CommandOptions&)>;
  std::vector<std::pair<CLI::App*, Command>> commands;
  const auto add = [&](const char* name, const char* help, Command cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", f.config, "JSON run config; flags override its values");
    commands.emplace_back(sub, std::move(cmd));
    return sub;
  };

  auto* synth = add("synth", "Generate the synthetic dataset (CSV, cache, manifest)", cmd_synth);
  synth->add_option("--synth-seed", f.synth_seed, "Generator seed (default 42)");
  add_out_flags(synth, f);

  auto* stats = add("data-stats", "Per-session frame, hard-frame and violation counts", cmd_data_stats);
  add_data_flags(stats, f);
  stats->add_option("--out", f.out, "Output directory");

  auto* tr = add("train", "Train one architecture in float", cmd_train);
  add_data_flags(tr, f);
  add_split_flags(tr, f);
  tr->add_option("--arch", f.arch, "Architecture, e.g. 1F-C8-P-FC-FC")->required();
  tr->add_option("--variant", f.variant, "Input variant: single or window8");
  tr->add_option("--seed", f.seed, "Training seed (default 0)");
  add_train_flags(tr, f);
  add_out_flags(tr, f);

  auto* qz = add("quantize", "Int8 quantization with QAT fine-tuning", cmd_quantize);
  qz->add_option("--model", f.model, "Float model JSON from `train`")->required();
  add_data_flags(qz, f);
  add_split_flags(qz, f);
  qz->add_flag("--no-qat", f.no_qat, "Post-training calibration only");
  add_train_flags(qz, f);
  add_out_flags(qz, f);

  auto* ev = add("eval", "Evaluate a float or int8 model on a dataset", cmd_eval);
  ev->add_option("--model", f.model, "model.json or model.tirm")->required();
  add_data_flags(ev, f);
  ev->add_option("--sessions-test", f.sessions_test, "Sessions to evaluate (default: all)");
  ev->add_option("--out", f.out, "Output directory");

  auto* bl = add("baseline", "Background-subtraction blob-counting baseline", cmd_baseline);
  add_data_flags(bl, f);
  bl->add_option("--sessions-test", f.sessions_test, "Sessions to evaluate (default 2-6)");
  bl->add_option("--bg-window", f.bg_window, "Background frames (default 8)");
  bl->add_option("--delta", f.delta, "Foreground threshold above background, deg C (default 1.5)");
  bl->add_option("--min-area", f.min_area, "Minimum blob area in pixels (default 2)");
  bl->add_option("--out", f.out, "Output directory");

  auto* ex = add("export", "Emit a .tirm model as a C byte array header", cmd_export);
  ex->add_option("--model", f.model, "model.tirm")->required();
  ex->add_option("--symbol", f.cmd.symbol, "C symbol and file name (default irdist_model)");
  add_out_flags(ex, f);

  auto* sw = add("sweep", "Grid sweep over architectures and seeds", cmd_sweep);
  add_data_flags(sw, f);
  add_split_flags(sw, f);
  sw->add_option("--grid", f.grid, "Preset: small, paper96, default, or a comma list");
  sw->add_option("--arch", f.arch, "Comma list of architectures (overrides --grid)");
  sw->add_option("--variant", f.variant, "Restrict to one input variant: single or window8");
  sw->add_option("--seeds", f.seeds, "Seeds, e.g. 0-4 or 0,1 (default 0,1)");
  sw->add_option("--workers", f.workers, "Parallel training runs (default 1)");
  sw->add_flag("--no-qat", f.no_qat, "Skip QAT and int8 evaluation");
  add_train_flags(sw, f);
  add_out_flags(sw, f);

  auto* pa = add("pareto", "Rebuild tables, fronts and deployment picks from a sweep", cmd_pareto);
  pa->add_option("--results", f.results, "Sweep results directory");
  pa->add_option("--out", f.out, "Where to write reports (default: the results directory)");

  auto* ge = add("geometry", "Field-of-view width, diagonal and 2 m rule validity", cmd_geometry);
  ge->add_option("--height", f.height, "Sensor height, m (default 2.4)");
  ge->add_option("--head-height", f.head_height, "Minimum head height, m (default 1.5)");
  ge->add_option("--angle", f.angle, "Full view angle, degrees (default 60)");
  ge->add_option("--rule", f.cmd.distance_rule, "Distance rule, m (default 2.0)");
  ge->add_option("--out", f.out, "Write geometry.json here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    RunConfig cfg = resolve(f);
    CommandOptions opt = f.cmd;
    if (!f.model.empty()) opt.model = f.model;
    if (!f.results.empty()) opt.results = f.results;
    opt.out_given = !cfg.out.empty();
    for (const auto& [sub, cmd] : commands) {
      if (sub->parsed()) return cmd(cfg, opt);
    }
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error[config]: key '" << e.key() << "': " << e.detail() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "error[parse]: row " << e.row() << ": " << e.what() << "\n";
    return kBadInput;
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.category()) << "]: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return kInternal;
  }
}
