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

#ifndef IRDIST_SEARCH_HPP_
#define IRDIST_SEARCH_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irdist/arch.hpp"
#include "irdist/data.hpp"
#include "irdist/metrics.hpp"
#include "irdist/nn.hpp"

namespace irdist {

struct RunRecord {
  std::string arch;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricBundle float_test;
  std::optional<MetricBundle> quant_test;  // int8 path after QAT
  int epochs = 0;
  double best_val_loss = 0.0;
  int qat_epochs = 0;
};

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // unbiased (n - 1); 0 for n < 2
  std::size_t n = 0;
};

MeanStd mean_std(std::span<const double> values);

struct ConfigSummary {
  std::string arch;
  std::size_t params = 0;
  std::uint64_t macs = 0;
  std::size_t bytes = 0;
  std::size_t runs_ok = 0;
  std::size_t runs_failed = 0;
  std::map<std::string, MeanStd> float_stats;  // keyed by metric name
  std::map<std::string, MeanStd> quant_stats;
};

struct SweepResult {
  std::vector<RunRecord> runs;        // grid order, then seed order
  std::vector<ConfigSummary> configs; // grid order
};

// Holds the split for each input variant; a missing one fails its runs.
struct SweepInputs {
  const DatasetSplit* single = nullptr;
  const DatasetSplit* windowed = nullptr;

  const DatasetSplit& for_arch(const ArchConfig& arch) const;
};

struct SweepOptions {
  std::size_t workers = 1;
  bool qat = false;
  double qat_initial_lr = 5e-4;
  // When set, each finished run is written to <dir>/runs/ and existing run
  // files are loaded instead of retrained.
  std::optional<std::filesystem::path> results_dir;
  std::function<void(const RunRecord&)> on_run_complete;
};

std::vector<std::uint64_t> default_seeds();  // {0,1,2,3,4}

// Trains every (config, seed). A failing run is recorded, never fatal.
SweepResult run_sweep(std::span<const ArchConfig> grid, const SweepInputs& inputs,
                      const TrainConfig& train_config, std::span<const std::uint64_t> seeds,
                      const SweepOptions& options = {});

// Deterministic reduce keyed by (arch, seed); run order does not matter.
SweepResult aggregate(std::span<const ArchConfig> grid, std::span<const std::uint64_t> seeds,
                      std::vector<RunRecord> runs);

std::string run_record_json(const RunRecord& run);
RunRecord run_record_from_json(const std::string& text);
std::filesystem::path run_record_path(const std::filesystem::path& results_dir,
                                      const std::string& arch, std::uint64_t seed);

// One row per config: costs plus mean/std of every metric.
std::string sweep_table_csv(const SweepResult& result);
SweepResult read_sweep_runs(const std::filesystem::path& results_dir);

struct ParetoPoint {
  std::string name;
  double accuracy = 0.0;
  double cost = 0.0;

  bool operator==(const ParetoPoint&) const = default;
};

// Non-dominated points, ascending cost. q dominates p when
// cost(q) <= cost(p) and acc(q) >= acc(p) with one strict; of identical
// points only the lexicographically smallest name survives.
std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points);

struct DeploymentSelection {
  ParetoPoint min_size;
  ParetoPoint max_acc_minus1;
  ParetoPoint max_acc;
};

// Accuracy in [0, 1]; the MaxAcc-1% pick tolerates a drop of up to 0.01.
DeploymentSelection select_deployment_points(std::span<const ParetoPoint> front);

enum class CostAxis { kParams, kMacs };

// Points for one metric (e.g. "balanced_accuracy") from float or quantized
// summaries; configs without that metric are skipped.
std::vector<ParetoPoint> points_from(const SweepResult& result, CostAxis axis,
                                     const std::string& metric = "balanced_accuracy",
                                     bool quantized = false);

}  // namespace irdist

#endif  // IRDIST_SEARCH_HPP_
