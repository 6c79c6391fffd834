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

#ifndef IRDIST_BASELINE_HPP_
#define IRDIST_BASELINE_HPP_

#include <array>
#include <cstdint>
#include <set>
#include <span>

#include "irdist/data.hpp"
#include "irdist/metrics.hpp"

namespace irdist {

// Reconstructed background-subtraction people counter. The reference
// vendor implementation is closed; only its 8-frame background window is
// known, everything else here is a standard threshold-and-label pipeline.
struct BaselineConfig {
  std::size_t bg_window = 8;
  double delta_threshold = 1.5;  // degrees Celsius above background
  std::size_t min_blob_area = 2;  // pixels, 4-connected

  void validate() const;
};

using PixelGrid = std::array<float, kPixels>;
using Mask = std::array<std::uint8_t, kPixels>;

// Foreground of the last frame against the per-pixel mean of the bg_window
// frames before it. Needs at least bg_window + 1 frames.
Mask foreground_mask(std::span<const PixelGrid> window, const BaselineConfig& config);

// Number of 4-connected components with at least min_area pixels.
int count_blobs(const Mask& mask, std::size_t min_area);

int baseline_count(std::span<const PixelGrid> window, const BaselineConfig& config);
int baseline_count(std::span<const Frame> window, const BaselineConfig& config);

// count >= 2
bool baseline_violation(std::span<const PixelGrid> window, const BaselineConfig& config);
bool baseline_violation(std::span<const Frame> window, const BaselineConfig& config);

struct BaselineEvaluation {
  MetricBundle metrics;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // no full history or hard-to-label target
};

// Runs the detector on every frame of `sessions` (all sessions if empty)
// that has bg_window consecutive predecessors; hard-to-label frames are not
// scored.
BaselineEvaluation evaluate_baseline(std::span<const Frame> frames, const std::set<int>& sessions,
                                     const BaselineConfig& config);

}  // namespace irdist

#endif  // IRDIST_BASELINE_HPP_
