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

#include "irdist/baseline.hpp"

#include <vector>

#include "irdist/arch.hpp"
#include "irdist/error.hpp"

namespace irdist {

void BaselineConfig::validate() const {
  if (bg_window < 1) throw ConfigError("baseline.bg_window", "must be >= 1");
  if (!(delta_threshold > 0.0)) throw ConfigError("baseline.delta_threshold", "must be > 0");
}

Mask foreground_mask(std::span<const PixelGrid> window, const BaselineConfig& config) {
  config.validate();
  if (window.size() < config.bg_window + 1) {
    throw InvalidArgumentError("baseline: window of " + std::to_string(window.size()) +
                               " frames, need bg_window + 1 = " +
                               std::to_string(config.bg_window + 1));
  }
  const PixelGrid& current = window.back();
  const auto history = window.subspan(window.size() - 1 - config.bg_window, config.bg_window);
  Mask mask{};
  for (std::size_t p = 0; p < kPixels; ++p) {
    double bg = 0.0;
    for (const auto& f : history) bg += f[p];
    bg /= static_cast<double>(history.size());
    mask[p] = current[p] > bg + config.delta_threshold ? 1 : 0;
  }
  return mask;
}

int count_blobs(const Mask& mask, std::size_t min_area) {
  std::array<std::uint8_t, kPixels> seen{};
  std::vector<std::size_t> stack;
  int blobs = 0;
  for (std::size_t start = 0; start < kPixels; ++start) {
    if (!mask[start] || seen[start]) continue;
    std::size_t area = 0;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++area;
      const std::size_t r = p / kFrameSide, c = p % kFrameSide;
      const auto visit = [&](std::size_t q) {
        if (mask[q] && !seen[q]) {
          seen[q] = 1;
          stack.push_back(q);
        }
      };
      if (r > 0) visit(p - kFrameSide);
      if (r + 1 < kFrameSide) visit(p + kFrameSide);
      if (c > 0) visit(p - 1);
      if (c + 1 < kFrameSide) visit(p + 1);
    }
    if (area >= min_area) ++blobs;
  }
  return blobs;
}

int baseline_count(std::span<const PixelGrid> window, const BaselineConfig& config) {
  return count_blobs(foreground_mask(window, config), config.min_blob_area);
}

int baseline_count(std::span<const Frame> window, const BaselineConfig& config) {
  std::vector<PixelGrid> grids;
  grids.reserve(window.size());
  for (const auto& f : window) grids.push_back(f.pixels);
  return baseline_count(grids, config);
}

bool baseline_violation(std::span<const PixelGrid> window, const BaselineConfig& config) {
  return baseline_count(window, config) >= 2;
}

bool baseline_violation(std::span<const Frame> window, const BaselineConfig& config) {
  return baseline_count(window, config) >= 2;
}

BaselineEvaluation evaluate_baseline(std::span<const Frame> frames, const std::set<int>& sessions,
                                     const BaselineConfig& config) {
  config.validate();
  BaselineEvaluation ev;
  std::vector<std::uint8_t> predicted, labels;
  std::vector<PixelGrid> window;
  std::size_t run_start = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    const bool continues = i > 0 && frames[i - 1].session_id == f.session_id &&
                           frames[i - 1].frame_index + 1 == f.frame_index;
    if (!continues) run_start = i;
    if (!sessions.empty() && !sessions.count(f.session_id)) continue;
    if (f.hard_to_label || i - run_start < config.bg_window) {
      ++ev.skipped;
      continue;
    }
    window.clear();
    for (std::size_t k = i - config.bg_window; k <= i; ++k) window.push_back(frames[k].pixels);
    predicted.push_back(baseline_violation(std::span<const PixelGrid>(window), config) ? 1 : 0);
    labels.push_back(f.violation() ? 1 : 0);
    ++ev.evaluated;
  }
  ev.metrics = evaluate_decisions(predicted, labels);
  return ev;
}

}  // namespace irdist
