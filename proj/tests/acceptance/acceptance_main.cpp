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

// End-to-end acceptance checks. Prints one line per criterion:
//   [PASS|FAIL|SKIP] <number> <name>: <detail> (<seconds>s)
// and exits non-zero if any criterion fails. Criterion 6 needs the real
// recordings; point IRDIST_REAL_DATA at the CSV to enable it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "grad_check.hpp"
#include "irdist/arch.hpp"
#include "irdist/baseline.hpp"
#include "irdist/data.hpp"
#include "irdist/geometry.hpp"
#include "irdist/metrics.hpp"
#include "irdist/nn.hpp"
#include "irdist/quant.hpp"
#include "irdist/search.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace irdist {
namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kFail;
  std::string detail;
};

Outcome verdict(bool ok, const std::string& detail) { return {ok ? Status::kPass : Status::kFail, detail}; }

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Outcome cost_model() {
  struct Row {
    const char* arch;
    std::size_t bytes;
    std::uint64_t macs;
    const char* kb;
  };
  const Row rows[] = {{"1F-C8-P-FC", 180, 2664, "0.18k"},
                      {"1F-C8-P-FC-FC", 5036, 7264, "4.9k"},
                      {"8F-C32-FC-FC", 76484, 156736, "74.7k"}};
  std::ostringstream d;
  bool ok = true;
  for (const auto& r : rows) {
    const auto a = ArchConfig::parse(r.arch);
    const auto bytes = quantized_size_bytes(a);
    const auto macs = mac_count(a);
    ok = ok && bytes == r.bytes && macs == r.macs && format_kbytes(bytes) == r.kb;
    d << r.arch << " " << bytes << "B/" << macs << "MACs (" << format_kbytes(bytes) << "/"
      << format_kmacs(macs) << ") ";
  }
  return verdict(ok, d.str());
}

Outcome gradients() {
  double worst = 0;
  std::size_t checked = 0, kinks = 0;
  std::string worst_arch;
  std::uint64_t seed = 100;
  for (const auto& a : default_grid()) {
    const auto r = testing::grad_check(a, seed++, 4, 2000, 48);
    checked += r.checked;
    kinks += r.skipped_kinks;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_arch = a.name();
    }
  }
  return verdict(worst <= 1e-4, std::to_string(default_grid().size()) + " archs, " + std::to_string(checked) +
                                    " coords, " + std::to_string(kinks) + " kink-skipped, max rel err " +
                                    std::to_string(worst) + " (" + worst_arch + ")");
}

Outcome parity() {
  constexpr int kInputs = 1000;
  double worst_within = 1.0, worst_agree = 1.0;
  std::string worst_arch;
  std::uint64_t seed = 500;
  for (const auto& a : default_grid()) {
    Rng rng(seed++);
    auto params = init_params<float>(a, rng);
    for (auto& l : params.layers)
      for (float& b : l.bias.data()) b = static_cast<float>(rng.normal(0.0, 0.1));
    std::vector<Tensor> calib;
    for (int i = 0; i < 128; ++i) calib.push_back(testing::random_tensor<float>(a.input_shape(), rng));
    const auto model = calibrate(a, params, calib);
    int within = 0, agree = 0;
    for (int i = 0; i < kInputs; ++i) {
      const auto x = testing::random_tensor<float>(a.input_shape(), rng);
      const auto q = int_infer(model, quantize_input(model, x));
      const double fq = fake_quant_logit(model, x.cast<double>());
      within += std::abs(q.logit - fq) <= model.output.scale * (1 + 1e-9) ? 1 : 0;
      agree += (q.probability >= 0.5) == (sigmoid(fq) >= 0.5) ? 1 : 0;
    }
    const double w = within / double(kInputs), g = agree / double(kInputs);
    if (w < worst_within || g < worst_agree) worst_arch = a.name();
    worst_within = std::min(worst_within, w);
    worst_agree = std::min(worst_agree, g);
  }
  return verdict(worst_within >= 0.99 && worst_agree >= 0.995,
                 "worst within-one-step " + fmt(worst_within, 3) + ", worst decision agreement " +
                     fmt(worst_agree, 3) + (worst_arch.empty() ? "" : " (" + worst_arch + ")"));
}

SplitSpec synthetic_split_spec() {
  SplitSpec s;
  s.train_sessions = {1};
  s.test_sessions = {2, 3, 4, 5};
  return s;
}

Outcome synthetic_end_to_end() {
  const auto frames = synth_generate(SynthSpec{}, 42);
  const auto split = build_split(frames, synthetic_split_spec(), SampleVariant::single());
  const std::vector<ArchConfig> grid{ArchConfig::parse("1F-C8-P-FC-FC")};
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  SweepOptions opt;
  opt.qat = true;
  const auto r = run_sweep(grid, {&split, nullptr}, TrainConfig{}, seeds, opt);
  const auto& c = r.configs.at(0);
  if (c.runs_ok != seeds.size()) return {Status::kFail, "runs failed: " + r.runs[0].error};
  const double f = c.float_stats.at("balanced_accuracy").mean;
  const double q = c.quant_stats.at("balanced_accuracy").mean;
  return verdict(f >= 0.90 && q >= 0.88, grid[0].name() + " on " + std::to_string(frames.size()) +
                                             " synthetic frames, float " + fmt(f) + ", int8 after QAT " + fmt(q));
}

Outcome oracles() {
  Rng rng(31337);
  std::size_t pareto_bad = 0, auc_bad = 0, window_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<ParetoPoint> p;
    const auto n = 1 + rng.below(40);
    for (std::size_t i = 0; i < n; ++i) {
      p.push_back({"p" + std::to_string(i), double(rng.below(12)) / 12, double(rng.below(15))});
    }
    std::vector<std::string> got;
    for (const auto& f : pareto_front(p)) got.push_back(f.name);
    std::sort(got.begin(), got.end());
    pareto_bad += got != testing::brute_force_front(p) ? 1 : 0;
  }
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng.below(80);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    const bool coarse = rng.bernoulli(0.5);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? double(rng.below(6)) / 5 : rng.uniform();
      y[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    auc_bad += std::abs(roc_auc(s, y) - testing::pair_count_auc(s, y)) > 1e-12 ? 1 : 0;
  }
  for (int t = 0; t < 300; ++t) {
    std::vector<Frame> frames;
    for (int s = 1; s <= 1 + int(rng.below(4)); ++s) {
      std::int64_t idx = std::int64_t(rng.below(5));
      const auto n = rng.below(60);
      for (std::size_t i = 0; i < n; ++i) {
        idx += rng.bernoulli(0.05) ? 1 + std::int64_t(rng.below(3)) : 0;
        frames.push_back(testing::flat_frame(s, idx++, 20.0f, 0, rng.bernoulli(0.04)));
      }
    }
    for (std::size_t w : {1u, 8u}) {
      window_bad += make_samples(frames, SampleVariant::windowed(w)).size() != testing::brute_force_windows(frames, w);
    }
  }
  return verdict(pareto_bad + auc_bad + window_bad == 0,
                 "mismatches: pareto " + std::to_string(pareto_bad) + "/1000, auc " + std::to_string(auc_bad) +
                     "/500, windows " + std::to_string(window_bad) + "/600");
}

Outcome real_dataset() {
  const char* path = std::getenv("IRDIST_REAL_DATA");
  if (path == nullptr || *path == '\0') return {Status::kSkip, "IRDIST_REAL_DATA not set"};
  const auto frames = load_dataset(path).frames;
  SplitSpec spec;  // train {1}, test {2..6}
  const auto windowed = build_split(frames, spec, SampleVariant::windowed(8));
  const auto single = build_split(frames, spec, SampleVariant::single());
  const std::vector<ArchConfig> grid{ArchConfig::parse("8F-C32-FC-FC"), ArchConfig::parse("1F-C8-P-FC-FC")};
  const auto r = run_sweep(grid, {&single, &windowed}, TrainConfig{}, default_seeds());
  const auto bl = evaluate_baseline(frames, spec.test_sessions, BaselineConfig{});
  const double b = bl.metrics.balanced_accuracy.value_or(0.0);
  bool ok = b >= 0.50 && b <= 0.70;
  std::string d = "baseline " + fmt(b);
  for (const auto& c : r.configs) {
    const auto it = c.float_stats.find("balanced_accuracy");
    const double m = it == c.float_stats.end() ? 0.0 : it->second.mean;
    ok = ok && m >= 0.80 && m > b;
    d += ", " + c.arch + " " + fmt(m) + "+-" + fmt(it == c.float_stats.end() ? 0.0 : it->second.stddev);
  }
  return verdict(ok, d);
}

Outcome determinism() {
  const auto frames = synth_generate(SynthSpec{}, 42);
  const auto single = build_split(frames, synthetic_split_spec(), SampleVariant::single());
  const auto windowed = build_split(frames, synthetic_split_spec(), SampleVariant::windowed(8));
  const auto grid = small_grid();
  const std::vector<std::uint64_t> seeds{0, 1};
  const TrainConfig tc;
  const auto sweep = [&](const char* name) {
    SweepOptions opt;
    opt.qat = true;
    opt.results_dir = testing::scratch_dir(name);
    return sweep_table_csv(run_sweep(grid, {&single, &windowed}, tc, seeds, opt));
  };
  const auto a = sweep("accept_sweep_a");
  const auto b = sweep("accept_sweep_b");
  return verdict(a == b && !a.empty(), std::to_string(grid.size()) + " configs x " + std::to_string(seeds.size()) +
                                           " seeds with QAT, tables " + (a == b ? "identical" : "differ") +
                                           " (" + std::to_string(a.size()) + " bytes)");
}

Outcome geometry() {
  const auto at = [](double h) {
    MountSpec m;
    m.sensor_height = h;
    return m;
  };
  const double w_lo = fov_width(at(2.4)), w_hi = fov_width(at(2.7));
  const double d_lo = fov_diagonal(at(2.4)), d_hi = fov_diagonal(at(2.7));
  const auto r3 = [](double v) { return std::round(v * 1000) / 1000; };
  const auto r2 = [](double v) { return std::round(v * 100) / 100; };
  const bool ok = r3(w_lo) == 1.080 && r3(w_hi) == 1.440 && r2(d_lo) == 1.53 && r2(d_hi) == 2.04;
  return verdict(ok, "width [" + fmt(w_lo, 3) + ", " + fmt(w_hi, 3) + "] m, diagonal [" + fmt(d_lo, 3) + ", " +
                         fmt(d_hi, 3) + "] m (diagonal printed to 2 decimals: " + fmt(d_lo, 2) + "/" + fmt(d_hi, 2) +
                         ")");
}

}  // namespace
}  // namespace irdist

int main() {
  using namespace irdist;
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "cost-model", cost_model},     {2, "gradients", gradients},
      {3, "quant-parity", parity},       {4, "synthetic-end-to-end", synthetic_end_to_end},
      {5, "oracles", oracles},           {6, "real-dataset", real_dataset},
      {7, "determinism", determinism},   {8, "geometry", geometry}};
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kSkip ? "SKIP" : "FAIL";
    std::printf("[%s] %d %s: %s (%.1fs)\n", tag, c.number, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.status == Status::kFail ? 1 : 0;
  }
  return failures == 0 ? 0 : 1;
}
