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

#include "commands.hpp"

#include <cstdio>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "irdist/arch.hpp"
#include "irdist/baseline.hpp"
#include "irdist/data.hpp"
#include "irdist/error.hpp"
#include "irdist/geometry.hpp"
#include "irdist/io.hpp"
#include "irdist/metrics.hpp"
#include "irdist/model_io.hpp"
#include "irdist/quant.hpp"
#include "irdist/search.hpp"

namespace irdist::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_metric(const std::optional<double>& v) {
  return v ? format_double(*v, 4) : std::string("n/a");
}

std::string metric_line(const std::string& label, const MetricBundle& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s bal_acc %-7s acc %-7s f1 %-7s auc %-7s", label.c_str(),
                fmt_metric(m.balanced_accuracy).c_str(), fmt_metric(m.accuracy).c_str(),
                fmt_metric(m.f1).c_str(), fmt_metric(m.roc_auc).c_str());
  return buf;
}

fs::path out_dir(const RunConfig& cfg, const std::string& command) {
  return cfg.out.empty() ? default_out_dir(command) : cfg.out;
}

// Returns true when `marker` exists and the command should leave it alone.
bool skip_existing(const fs::path& marker, const CommandOptions& opt) {
  if (!fs::exists(marker) || opt.overwrite) return false;
  std::cout << "skipped: " << marker.string() << " exists (pass --overwrite to replace)\n";
  return true;
}

void persist_config(const fs::path& dir, const RunConfig& cfg) {
  write_text_file(dir / "run_config.json", cfg.to_json());
}

void write_summary(const fs::path& path, const std::string& text) {
  write_text_file(path, text);
  std::cout << text;
}

std::vector<Frame> load_frames(const RunConfig& cfg) {
  if (cfg.synthetic) return synth_generate(SynthSpec{}, cfg.synth_seed);
  if (cfg.data.empty()) throw ConfigError("data", "no dataset: pass --data <file> or --synthetic");
  std::vector<fs::path> csvs;
  std::vector<Frame> frames;
  for (const auto& p : cfg.data) {
    if (p.extension() == ".json") {
      verify_manifest(p);
    } else if (p.extension() == ".irds") {
      auto cached = read_dataset_cache(p);
      frames.insert(frames.end(), cached.begin(), cached.end());
    } else {
      csvs.push_back(p);
    }
  }
  if (!csvs.empty()) {
    auto loaded = load_datasets(csvs, cfg.columns);
    for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
    frames.insert(frames.end(), loaded.frames.begin(), loaded.frames.end());
  }
  group_and_order(frames);
  return frames;
}

SampleVariant variant_for(const ArchConfig& arch) {
  return arch.variant == InputVariant::kSingle ? SampleVariant::single()
                                               : SampleVariant::windowed(kDefaultWindow);
}

ArchConfig resolve_arch(const RunConfig& cfg) {
  if (!cfg.arch) throw ConfigError("arch", "no architecture: pass --arch, e.g. 1F-C8-P-FC-FC");
  ArchConfig arch;
  try {
    arch = ArchConfig::parse(*cfg.arch);
  } catch (const Error& e) {
    throw ConfigError("arch", e.what());
  }
  if (cfg.variant && parse_variant(*cfg.variant, "variant").channels() != arch.input_channels()) {
    throw ConfigError("variant", "--variant " + *cfg.variant + " conflicts with --arch " + *cfg.arch);
  }
  return arch;
}

std::vector<Frame> frames_in(std::span<const Frame> frames, const std::set<int>& sessions) {
  std::vector<Frame> out;
  for (const auto& f : frames) {
    if (sessions.empty() || sessions.count(f.session_id)) out.push_back(f);
  }
  return out;
}

std::string stats_table(std::span<const SessionStats> stats) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-8s %8s %6s %10s %7s %8s\n", "session", "frames", "hard",
                "violations", "viol%", "people");
  os << buf;
  std::size_t frames = 0, hard = 0, viol = 0;
  for (const auto& s : stats) {
    std::snprintf(buf, sizeof buf, "%-8d %8zu %6zu %10zu %7.1f %5d..%d\n", s.session_id, s.frames,
                  s.hard, s.violations, s.violation_percent(), s.min_people, s.max_people);
    os << buf;
    frames += s.frames;
    hard += s.hard;
    viol += s.violations;
  }
  std::snprintf(buf, sizeof buf, "%-8s %8zu %6zu %10zu %7.1f\n", "total", frames, hard, viol,
                frames ? 100.0 * static_cast<double>(viol) / static_cast<double>(frames) : 0.0);
  os << buf;
  return os.str();
}

json stats_json(std::span<const SessionStats> stats) {
  json sessions = json::array();
  std::size_t total = 0;
  for (const auto& s : stats) {
    sessions.push_back({{"session", s.session_id},
                        {"frames", s.frames},
                        {"hard_to_label", s.hard},
                        {"violations", s.violations},
                        {"violation_percent", s.violation_percent()},
                        {"min_people", s.min_people},
                        {"max_people", s.max_people}});
    total += s.frames;
  }
  return {{"sessions", sessions}, {"total_frames", total}};
}

std::string points_csv(std::span<const ParetoPoint> points, std::span<const ParetoPoint> front,
                       const std::string& cost_name) {
  std::string out = "arch," + cost_name + ",balanced_accuracy,on_front\n";
  for (const auto& p : points) {
    bool on = false;
    for (const auto& f : front) on = on || f.name == p.name;
    out += p.name + "," + format_double(p.cost, 0) + "," + format_double(p.accuracy, 6) + "," +
           (on ? "1" : "0") + "\n";
  }
  return out;
}

json point_json(const ParetoPoint& p) {
  return {{"arch", p.name}, {"params", static_cast<std::uint64_t>(p.cost)}, {"balanced_accuracy", p.accuracy}};
}

// Writes every table derived from `result` into `dir`; returns the summary.
std::string write_pareto_reports(const fs::path& dir, const SweepResult& result) {
  write_text_file(dir / "table.csv", sweep_table_csv(result));
  std::ostringstream summary;
  json selection = json::object();
  for (const bool quantized : {false, true}) {
    const std::string tag = quantized ? "int8" : "float";
    const auto by_params = points_from(result, CostAxis::kParams, "balanced_accuracy", quantized);
    const auto by_macs = points_from(result, CostAxis::kMacs, "balanced_accuracy", quantized);
    if (by_params.empty()) continue;
    const auto front_p = pareto_front(by_params);
    const auto front_m = pareto_front(by_macs);
    write_text_file(dir / ("points_params_" + tag + ".csv"), points_csv(by_params, front_p, "params"));
    write_text_file(dir / ("points_macs_" + tag + ".csv"), points_csv(by_macs, front_m, "macs"));
    const auto sel = select_deployment_points(front_p);
    selection[tag] = {{"MinSize", point_json(sel.min_size)},
                      {"MaxAccMinus1", point_json(sel.max_acc_minus1)},
                      {"MaxAcc", point_json(sel.max_acc)}};
    summary << "[" << tag << "] pareto front (balanced accuracy vs params):\n";
    for (const auto& p : front_p) {
      const auto arch = ArchConfig::parse(p.name);
      char buf[160];
      std::snprintf(buf, sizeof buf, "  %-22s params %6.0f  bytes %7s  macs %6s  bal_acc %.4f\n",
                    p.name.c_str(), p.cost, format_kbytes(quantized_size_bytes(arch)).c_str(),
                    format_kmacs(mac_count(arch)).c_str(), p.accuracy);
      summary << buf;
    }
    summary << "  MinSize      " << sel.min_size.name << "\n"
            << "  MaxAcc-1%    " << sel.max_acc_minus1.name << "\n"
            << "  MaxAcc       " << sel.max_acc.name << "\n";
  }
  write_text_file(dir / "selection.json", selection.dump(2) + "\n");
  std::size_t failed = 0;
  for (const auto& r : result.runs) failed += r.ok ? 0 : 1;
  summary << result.runs.size() << " runs, " << failed << " failed\n";
  for (const auto& r : result.runs) {
    if (!r.ok) summary << "  failed " << r.arch << " seed " << r.seed << ": " << r.error << "\n";
  }
  write_text_file(dir / "pareto_summary.txt", summary.str());
  return summary.str();
}

}  // namespace

int cmd_synth(const RunConfig& cfg, const CommandOptions& opt) {
  const fs::path dir = out_dir(cfg, "synth");
  const fs::path csv = dir / "synthetic.csv";
  if (skip_existing(csv, opt)) return 0;
  const auto frames = synth_generate(SynthSpec{}, cfg.synth_seed);
  write_dataset_csv(csv, frames);
  write_dataset_cache(dir / "synthetic.irds", frames);
  const std::vector<fs::path> files{csv, dir / "synthetic.irds"};
  write_manifest(dir / "manifest.json", files);
  const auto stats = session_stats(frames);
  write_text_file(dir / "data_stats.json", stats_json(stats).dump(2) + "\n");
  persist_config(dir, cfg);
  write_summary(dir / "summary.txt", "synthetic dataset, seed " + std::to_string(cfg.synth_seed) +
                                         ", fingerprint " + dataset_fingerprint(frames) + "\n" +
                                         stats_table(stats) + "wrote " + csv.string() + "\n");
  return 0;
}

int cmd_data_stats(const RunConfig& cfg, const CommandOptions&) {
  const auto frames = load_frames(cfg);
  const auto stats = session_stats(frames);
  const fs::path dir = out_dir(cfg, "data-stats");
  json j = stats_json(stats);
  j["fingerprint"] = dataset_fingerprint(frames);
  write_text_file(dir / "data_stats.json", j.dump(2) + "\n");
  write_summary(dir / "summary.txt", stats_table(stats));
  return 0;
}

int cmd_train(const RunConfig& cfg, const CommandOptions& opt) {
  const ArchConfig arch = resolve_arch(cfg);
  const fs::path dir = out_dir(cfg, "train");
  if (skip_existing(dir / "model.json", opt)) return 0;
  const auto frames = load_frames(cfg);
  const auto split = build_split(frames, cfg.split, variant_for(arch));
  auto result = train(arch, split, cfg.train);

  FloatModel fm{arch, result.params, split.norm, dataset_fingerprint(frames), cfg.train.seed};
  write_float_model(dir / "model.json", fm);
  write_text_file(dir / "train_report.json", train_report_json(result.report));
  const auto test = evaluate_scores(predict(arch, result.params, split.test), labels_of(split.test));
  json metrics = {{"val", json::parse(metrics_json(result.report.val_metrics))},
                  {"test", json::parse(metrics_json(test))}};
  write_text_file(dir / "metrics.json", metrics.dump(2) + "\n");
  persist_config(dir, cfg);
  std::ostringstream s;
  s << arch.name() << ": " << param_count(arch) << " params, " << mac_count(arch) << " MACs, "
    << quantized_size_bytes(arch) << " B int8\n"
    << "samples train " << split.train.size() << " val " << split.val.size() << " test "
    << split.test.size() << "\n"
    << "epochs " << result.report.epochs_run << " (best " << result.report.best_epoch
    << ", val loss " << format_double(result.report.best_val_loss, 6) << ")\n"
    << metric_line("val", result.report.val_metrics) << "\n"
    << metric_line("test", test) << "\n";
  write_summary(dir / "summary.txt", s.str());
  return 0;
}

int cmd_quantize(const RunConfig& cfg, const CommandOptions& opt) {
  if (!opt.model) throw ConfigError("model", "pass --model <float model.json>");
  const FloatModel fm = read_float_model(*opt.model);
  const fs::path dir = out_dir(cfg, "quantize");
  const fs::path tirm = dir / "model.tirm";
  if (skip_existing(tirm, opt)) return 0;
  const auto frames = load_frames(cfg);
  const auto split = build_split(frames, cfg.split, variant_for(fm.arch));
  const std::string hash = dataset_fingerprint(frames);
  std::vector<std::string> notes;
  if (hash != fm.dataset_hash) notes.push_back("dataset differs from the one the float model was trained on");

  QuantizedModel qm;
  TrainReport report;
  const bool qat = cfg.qat;
  if (qat) {
    TrainConfig tc = cfg.train;
    tc.initial_lr = kQatInitialLr;
    auto r = qat_finetune(fm.arch, fm.params, split, tc);
    qm = std::move(r.model);
    report = std::move(r.report);
  } else {
    qm = calibrate(fm.arch, fm.params, calibration_inputs(split.train));
  }
  const auto labels = labels_of(split.test);
  const auto float_m = evaluate_scores(predict(fm.arch, fm.params, split.test), labels);
  const auto int8_m = evaluate_scores(predict_int8(qm, split.test), labels);

  write_tirm(tirm, qm);
  ModelMetadata meta;
  meta.arch = fm.arch.name();
  meta.dataset_hash = hash;
  meta.norm = fm.norm;
  meta.metrics = metrics_map(int8_m, "test_int8_");
  for (const auto& [k, v] : metrics_map(float_m, "test_float_")) meta.metrics[k] = v;
  meta.flags = qm.flags;
  meta.float_model = fs::weakly_canonical(*opt.model).string();
  write_metadata(sidecar_path(tirm), meta);
  if (qat) write_text_file(dir / "qat_report.json", train_report_json(report));
  persist_config(dir, cfg);

  std::ostringstream s;
  s << meta.arch << " quantized (" << (qat ? "QAT" : "post-training calibration") << "), "
    << encode_tirm(qm).size() << " B file, " << qm.parameter_bytes() << " B parameters\n"
    << metric_line("float", float_m) << "\n"
    << metric_line("int8", int8_m) << "\n";
  for (const auto& f : qm.flags) s << "flag: " << f << "\n";
  for (const auto& n : notes) s << "note: " << n << "\n";
  write_summary(dir / "summary.txt", s.str());
  return 0;
}

int cmd_eval(const RunConfig& cfg, const CommandOptions& opt) {
  if (!opt.model) throw ConfigError("model", "pass --model <model.json|model.tirm>");
  const auto frames = frames_in(load_frames(cfg), cfg.split.test_sessions);
  const bool is_tirm = opt.model->extension() == ".tirm";

  std::optional<FloatModel> fm;
  std::optional<QuantizedModel> qm;
  NormStats norm;
  ArchConfig arch;
  if (is_tirm) {
    qm = read_tirm(*opt.model);
    const auto side = sidecar_path(*opt.model);
    if (!fs::exists(side)) throw IoError("missing sidecar " + side.string() + " (holds normalization)");
    const auto meta = read_metadata(side);
    norm = meta.norm;
    arch = qm->arch;
    if (!meta.float_model.empty() && fs::exists(meta.float_model)) fm = read_float_model(meta.float_model);
  } else {
    fm = read_float_model(*opt.model);
    norm = fm->norm;
    arch = fm->arch;
  }
  auto samples = make_samples(frames, variant_for(arch));
  if (samples.empty()) throw InvalidArgumentError("eval: no labelled samples in the selected sessions");
  apply_normalization(norm, samples);
  const auto labels = labels_of(samples);

  json report = json::object();
  std::ostringstream s;
  s << arch.name() << " on " << samples.size() << " samples\n";
  const auto add = [&](const std::string& name, const std::vector<double>& scores) {
    const auto m = evaluate_scores(scores, labels);
    report[name] = json::parse(metrics_json(m));
    s << metric_line(name, m) << "\n";
  };
  if (fm) add("float", predict(fm->arch, fm->params, samples));
  if (qm) {
    std::vector<double> fq;
    for (const auto& smp : samples) fq.push_back(fake_quant_forward(*qm, smp.input));
    add("fakequant", fq);
    add("int8", predict_int8(*qm, samples));
  }
  const fs::path dir = out_dir(cfg, "eval");
  write_text_file(dir / "eval.json", report.dump(2) + "\n");
  write_summary(dir / "summary.txt", s.str());
  return 0;
}

int cmd_baseline(const RunConfig& cfg, const CommandOptions&) {
  cfg.baseline.validate();
  const auto frames = load_frames(cfg);
  const auto ev = evaluate_baseline(frames, cfg.split.test_sessions, cfg.baseline);
  const fs::path dir = out_dir(cfg, "baseline");
  json j = json::parse(metrics_json(ev.metrics));
  j["evaluated"] = ev.evaluated;
  j["skipped"] = ev.skipped;
  j["config"] = {{"bg_window", cfg.baseline.bg_window},
                 {"delta", cfg.baseline.delta_threshold},
                 {"min_blob_area", cfg.baseline.min_blob_area}};
  write_text_file(dir / "baseline.json", j.dump(2) + "\n");
  persist_config(dir, cfg);
  write_summary(dir / "summary.txt", "baseline on " + std::to_string(ev.evaluated) + " frames (" +
                                         std::to_string(ev.skipped) + " skipped)\n" +
                                         metric_line("baseline", ev.metrics) + "\n");
  return 0;
}

int cmd_export(const RunConfig& cfg, const CommandOptions& opt) {
  if (!opt.model) throw ConfigError("model", "pass --model <model.tirm>");
  const auto bytes = read_file_bytes(*opt.model);
  decode_tirm(bytes);  // validates before exporting
  const fs::path dir = out_dir(cfg, "export");
  const fs::path header = dir / (opt.symbol + ".h");
  if (skip_existing(header, opt)) return 0;
  write_text_file(header, export_c_array(bytes, opt.symbol));
  std::cout << "wrote " << header.string() << " (" << bytes.size() << " bytes)\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const CommandOptions& opt) {
  std::vector<ArchConfig> grid;
  try {
    grid = grid_from_preset(cfg.arch ? *cfg.arch : cfg.grid);
  } catch (const Error& e) {
    throw ConfigError(cfg.arch ? "arch" : "grid", e.what());
  }
  if (cfg.variant) {
    const auto want = parse_variant(*cfg.variant, "variant").channels();
    std::erase_if(grid, [&](const ArchConfig& a) { return a.input_channels() != want; });
    if (grid.empty()) throw ConfigError("variant", "no grid configuration uses --variant " + *cfg.variant);
  }
  const fs::path dir = out_dir(cfg, "sweep");
  const fs::path cfg_path = dir / "run_config.json";
  if (opt.overwrite) {
    fs::remove_all(dir / "runs");
  } else if (fs::exists(cfg_path)) {
    // Resuming is only sound under the same settings.
    auto strip = [](json j) {
      j.erase("workers");
      j.erase("out");
      return j;
    };
    if (strip(json::parse(read_text_file(cfg_path))) != strip(json::parse(cfg.to_json()))) {
      throw ConfigError("out", dir.string() + " holds results of a different run config; pass --overwrite");
    }
  }
  persist_config(dir, cfg);

  const auto frames = load_frames(cfg);
  std::optional<DatasetSplit> single, windowed;
  for (const auto& a : grid) {
    if (a.variant == InputVariant::kSingle && !single) single = build_split(frames, cfg.split, SampleVariant::single());
    if (a.variant == InputVariant::kWindowed && !windowed) windowed = build_split(frames, cfg.split, SampleVariant::windowed());
  }
  SweepInputs inputs{single ? &*single : nullptr, windowed ? &*windowed : nullptr};
  SweepOptions so;
  so.workers = cfg.workers;
  so.qat = cfg.qat;
  so.results_dir = dir;
  std::size_t done = 0;
  const std::size_t total = grid.size() * cfg.seeds.size();
  so.on_run_complete = [&](const RunRecord& r) {
    ++done;
    std::cerr << "[" << done << "/" << total << "] " << r.arch << " seed " << r.seed << ": "
              << (r.ok ? "bal_acc " + fmt_metric(r.float_test.balanced_accuracy) : "FAILED " + r.error)
              << "\n";
  };
  const auto result = run_sweep(grid, inputs, cfg.train, cfg.seeds, so);
  std::cout << write_pareto_reports(dir, result);
  return 0;
}

int cmd_pareto(const RunConfig& cfg, const CommandOptions& opt) {
  const fs::path results = opt.results ? *opt.results : out_dir(cfg, "sweep");
  const auto result = read_sweep_runs(results);
  const fs::path dir = opt.out_given ? cfg.out : results;
  std::cout << write_pareto_reports(dir, result);
  return 0;
}

int cmd_geometry(const RunConfig& cfg, const CommandOptions& opt) {
  cfg.mount.validate();
  const auto c = check_formulation(cfg.mount, opt.distance_rule);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "height %.2f m, head %.2f m, view %.1f deg, rule %.2f m\n"
                "linear (1.2h): width %.3f m  diagonal %.3f m  %s\n"
                "exact (2h tan): width %.3f m  diagonal %.3f m  %s\n",
                cfg.mount.sensor_height, cfg.mount.min_head_height, cfg.mount.view_angle,
                opt.distance_rule, c.width_linear, c.diagonal_linear,
                c.valid_linear ? "valid" : "invalid", c.width_exact, c.diagonal_exact,
                c.valid_exact ? "valid" : "invalid");
  std::string text = buf;
  if (c.models_disagree()) text += "note: the two field-of-view models disagree on validity\n";
  std::cout << text;
  if (opt.out_given) {
    json j = {{"height", cfg.mount.sensor_height},
              {"head_height", cfg.mount.min_head_height},
              {"view_angle", cfg.mount.view_angle},
              {"distance_rule", opt.distance_rule},
              {"linear", {{"width", c.width_linear}, {"diagonal", c.diagonal_linear}, {"valid", c.valid_linear}}},
              {"exact", {{"width", c.width_exact}, {"diagonal", c.diagonal_exact}, {"valid", c.valid_exact}}}};
    write_text_file(cfg.out / "geometry.json", j.dump(2) + "\n");
    write_text_file(cfg.out / "summary.txt", text);
  }
  return 0;
}

}  // namespace irdist::cli
