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

#include "irdist/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "irdist/error.hpp"
#include "irdist/io.hpp"
#include "irdist/quant.hpp"

namespace irdist {

using nlohmann::json;

namespace {

constexpr const char* kMetricNames[] = {"balanced_accuracy", "accuracy", "f1", "roc_auc"};

std::optional<double> metric_of(const MetricBundle& m, const std::string& name) {
  if (name == "balanced_accuracy") return m.balanced_accuracy;
  if (name == "accuracy") return m.accuracy;
  if (name == "f1") return m.f1;
  if (name == "roc_auc") return m.roc_auc;
  return std::nullopt;
}

json bundle_json(const MetricBundle& m) {
  json j;
  j["tp"] = m.confusion.tp;
  j["fp"] = m.confusion.fp;
  j["tn"] = m.confusion.tn;
  j["fn"] = m.confusion.fn;
  for (const char* name : kMetricNames) {
    const auto v = metric_of(m, name);
    j[name] = v ? json(*v) : json(nullptr);
  }
  return j;
}

MetricBundle bundle_from(const json& j) {
  MetricBundle m;
  m.confusion.tp = j.at("tp").get<std::uint64_t>();
  m.confusion.fp = j.at("fp").get<std::uint64_t>();
  m.confusion.tn = j.at("tn").get<std::uint64_t>();
  m.confusion.fn = j.at("fn").get<std::uint64_t>();
  const auto get = [&](const char* k) -> std::optional<double> {
    if (!j.contains(k) || j[k].is_null()) return std::nullopt;
    return j[k].get<double>();
  };
  m.balanced_accuracy = get("balanced_accuracy");
  m.accuracy = get("accuracy");
  m.f1 = get("f1");
  m.roc_auc = get("roc_auc");
  return m;
}

RunRecord execute_run(const ArchConfig& arch, const DatasetSplit& split, TrainConfig config,
                      std::uint64_t seed, const SweepOptions& options) {
  RunRecord rec;
  rec.arch = arch.name();
  rec.seed = seed;
  config.seed = seed;
  auto trained = train(arch, split, config);
  rec.epochs = trained.report.epochs_run;
  rec.best_val_loss = trained.report.best_val_loss;
  rec.float_test = evaluate_scores(predict(arch, trained.params, split.test), labels_of(split.test));
  if (options.qat) {
    TrainConfig qat = config;
    qat.initial_lr = options.qat_initial_lr;
    auto q = qat_finetune(arch, trained.params, split, qat);
    rec.qat_epochs = q.report.epochs_run;
    rec.quant_test = evaluate_scores(predict_int8(q.model, split.test), labels_of(split.test));
  }
  rec.ok = true;
  return rec;
}

}  // namespace

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  r.n = values.size();
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(r.n);
  // Identical values give exactly zero spread, not rounding noise.
  const bool constant = std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; });
  if (constant) r.mean = values[0];
  if (r.n > 1 && !constant) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(r.n - 1));
  }
  return r;
}

const DatasetSplit& SweepInputs::for_arch(const ArchConfig& arch) const {
  const DatasetSplit* s = arch.variant == InputVariant::kSingle ? single : windowed;
  if (!s) throw InvalidArgumentError("sweep: no dataset split for " + arch.name());
  if (s->variant.channels() != arch.input_channels()) {
    throw InvalidArgumentError("sweep: split channels do not match " + arch.name());
  }
  return *s;
}

std::vector<std::uint64_t> default_seeds() { return {0, 1, 2, 3, 4}; }

std::filesystem::path run_record_path(const std::filesystem::path& results_dir,
                                      const std::string& arch, std::uint64_t seed) {
  return results_dir / "runs" / (arch + "__seed" + std::to_string(seed) + ".json");
}

std::string run_record_json(const RunRecord& run) {
  json j;
  j["arch"] = run.arch;
  j["seed"] = run.seed;
  j["ok"] = run.ok;
  j["error"] = run.error;
  j["epochs"] = run.epochs;
  j["best_val_loss"] = run.best_val_loss;
  j["qat_epochs"] = run.qat_epochs;
  j["float_test"] = bundle_json(run.float_test);
  j["quant_test"] = run.quant_test ? bundle_json(*run.quant_test) : json(nullptr);
  return j.dump(2) + "\n";
}

RunRecord run_record_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunRecord r;
    r.arch = j.at("arch").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.ok = j.at("ok").get<bool>();
    r.error = j.value("error", "");
    r.epochs = j.value("epochs", 0);
    r.best_val_loss = j.value("best_val_loss", 0.0);
    r.qat_epochs = j.value("qat_epochs", 0);
    r.float_test = bundle_from(j.at("float_test"));
    if (j.contains("quant_test") && !j["quant_test"].is_null()) r.quant_test = bundle_from(j["quant_test"]);
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("run record: ") + e.what());
  }
}

SweepResult run_sweep(std::span<const ArchConfig> grid, const SweepInputs& inputs,
                      const TrainConfig& train_config, std::span<const std::uint64_t> seeds,
                      const SweepOptions& options) {
  if (grid.empty()) throw InvalidArgumentError("sweep: empty grid");
  if (seeds.empty()) throw InvalidArgumentError("sweep: no seeds");
  train_config.validate();

  const std::size_t total = grid.size() * seeds.size();
  std::vector<RunRecord> runs(total);
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;

  const auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const ArchConfig& arch = grid[i / seeds.size()];
      const std::uint64_t seed = seeds[i % seeds.size()];
      RunRecord rec;
      bool loaded = false;
      if (options.results_dir) {
        const auto path = run_record_path(*options.results_dir, arch.name(), seed);
        if (std::filesystem::exists(path)) {
          try {
            rec = run_record_from_json(read_text_file(path));
            loaded = rec.arch == arch.name() && rec.seed == seed &&
                     rec.quant_test.has_value() == options.qat;
          } catch (const Error&) {
            loaded = false;
          }
        }
      }
      if (!loaded) {
        try {
          rec = execute_run(arch, inputs.for_arch(arch), train_config, seed, options);
        } catch (const std::exception& e) {
          rec = RunRecord{};
          rec.arch = arch.name();
          rec.seed = seed;
          rec.ok = false;
          rec.error = e.what();
        }
        if (options.results_dir) {
          write_text_file(run_record_path(*options.results_dir, arch.name(), seed),
                          run_record_json(rec));
        }
      }
      if (options.on_run_complete) {
        std::lock_guard lock(callback_mutex);
        options.on_run_complete(rec);
      }
      runs[i] = std::move(rec);
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, total);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return aggregate(grid, seeds, std::move(runs));
}

SweepResult aggregate(std::span<const ArchConfig> grid, std::span<const std::uint64_t> seeds,
                      std::vector<RunRecord> runs) {
  std::map<std::pair<std::string, std::uint64_t>, RunRecord> keyed;
  for (auto& r : runs) keyed.insert_or_assign({r.arch, r.seed}, std::move(r));

  SweepResult out;
  for (const auto& arch : grid) {
    ConfigSummary cs;
    cs.arch = arch.name();
    cs.params = param_count(arch);
    cs.macs = mac_count(arch);
    cs.bytes = quantized_size_bytes(arch);
    std::map<std::string, std::vector<double>> fvals, qvals;
    for (std::uint64_t seed : seeds) {
      const auto it = keyed.find({cs.arch, seed});
      if (it == keyed.end()) continue;
      const RunRecord& r = it->second;
      out.runs.push_back(r);
      if (!r.ok) {
        ++cs.runs_failed;
        continue;
      }
      ++cs.runs_ok;
      for (const char* name : kMetricNames) {
        if (const auto v = metric_of(r.float_test, name)) fvals[name].push_back(*v);
        if (r.quant_test) {
          if (const auto v = metric_of(*r.quant_test, name)) qvals[name].push_back(*v);
        }
      }
    }
    for (const auto& [k, v] : fvals) cs.float_stats[k] = mean_std(v);
    for (const auto& [k, v] : qvals) cs.quant_stats[k] = mean_std(v);
    out.configs.push_back(std::move(cs));
  }
  return out;
}

std::string sweep_table_csv(const SweepResult& result) {
  std::string out = "arch,params,macs,bytes,runs_ok,runs_failed";
  for (const char* prefix : {"float_", "int8_"}) {
    for (const char* name : kMetricNames) {
      out += std::string(",") + prefix + name + "_mean," + prefix + name + "_std";
    }
  }
  out += "\n";
  const auto cell = [](const std::map<std::string, MeanStd>& stats, const char* name) {
    const auto it = stats.find(name);
    if (it == stats.end()) return std::string(",,");
    return "," + format_double(it->second.mean, 6) + "," + format_double(it->second.stddev, 6);
  };
  for (const auto& c : result.configs) {
    out += c.arch + "," + std::to_string(c.params) + "," + std::to_string(c.macs) + "," +
           std::to_string(c.bytes) + "," + std::to_string(c.runs_ok) + "," +
           std::to_string(c.runs_failed);
    for (const char* name : kMetricNames) out += cell(c.float_stats, name);
    for (const char* name : kMetricNames) out += cell(c.quant_stats, name);
    out += "\n";
  }
  return out;
}

SweepResult read_sweep_runs(const std::filesystem::path& results_dir) {
  const auto dir = results_dir / "runs";
  if (!std::filesystem::is_directory(dir)) throw IoError("no runs directory under " + results_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> runs;
  std::vector<std::string> names;
  std::vector<std::uint64_t> seeds;
  for (const auto& f : files) {
    runs.push_back(run_record_from_json(read_text_file(f)));
    if (std::find(names.begin(), names.end(), runs.back().arch) == names.end()) names.push_back(runs.back().arch);
    if (std::find(seeds.begin(), seeds.end(), runs.back().seed) == seeds.end()) seeds.push_back(runs.back().seed);
  }
  std::sort(seeds.begin(), seeds.end());
  // Order configs by the canonical grid where possible, then by name.
  std::vector<ArchConfig> grid;
  for (const auto& a : default_grid()) {
    if (std::find(names.begin(), names.end(), a.name()) != names.end()) grid.push_back(a);
  }
  return aggregate(grid, seeds, std::move(runs));
}

std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points) {
  std::vector<ParetoPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    return a.name < b.name;
  });
  std::vector<ParetoPoint> front;
  for (const auto& p : sorted) {
    // Everything kept so far is no more costly; p survives only by being
    // strictly more accurate than all of it.
    if (front.empty() || p.accuracy > front.back().accuracy) front.push_back(p);
  }
  return front;
}

DeploymentSelection select_deployment_points(std::span<const ParetoPoint> front) {
  if (front.empty()) throw InvalidArgumentError("select_deployment_points: empty front");
  const auto smaller = [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    return a.name < b.name;
  };
  DeploymentSelection sel;
  sel.max_acc = *std::max_element(front.begin(), front.end(), [&](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.accuracy != b.accuracy) return a.accuracy < b.accuracy;
    return smaller(b, a);
  });
  sel.min_size = *std::min_element(front.begin(), front.end(), smaller);
  // Rounding slack so a drop of exactly one point qualifies.
  const double cutoff = sel.max_acc.accuracy - 0.01 - 1e-12;
  std::optional<ParetoPoint> best;
  for (const auto& p : front) {
    if (p.accuracy >= cutoff && (!best || smaller(p, *best))) best = p;
  }
  sel.max_acc_minus1 = *best;
  return sel;
}

std::vector<ParetoPoint> points_from(const SweepResult& result, CostAxis axis,
                                     const std::string& metric, bool quantized) {
  std::vector<ParetoPoint> pts;
  for (const auto& c : result.configs) {
    const auto& stats = quantized ? c.quant_stats : c.float_stats;
    const auto it = stats.find(metric);
    if (it == stats.end()) continue;
    pts.push_back({c.arch, it->second.mean,
                   axis == CostAxis::kParams ? static_cast<double>(c.params)
                                             : static_cast<double>(c.macs)});
  }
  return pts;
}

}  // namespace irdist
