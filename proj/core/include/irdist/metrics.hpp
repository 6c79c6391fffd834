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

#ifndef IRDIST_METRICS_HPP_
#define IRDIST_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

namespace irdist {

// Positive class = violation.
struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  void add(bool predicted, bool actual);
  bool operator==(const Confusion&) const = default;
};

inline constexpr double kDecisionThreshold = 0.5;

Confusion confusion_from_scores(std::span<const double> scores,
                                std::span<const std::uint8_t> labels,
                                double threshold = kDecisionThreshold);

// All three throw UndefinedMetricError on a zero denominator.
double balanced_accuracy(const Confusion& c);
double accuracy(const Confusion& c);
double f1_score(const Confusion& c);

// Mann-Whitney U statistic normalised by P*N; ties count one half.
// O(n log n) via average ranks. Throws UndefinedMetricError unless both
// classes are present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Metrics that could not be computed stay empty.
struct MetricBundle {
  Confusion confusion;
  std::optional<double> balanced_accuracy;
  std::optional<double> accuracy;
  std::optional<double> f1;
  std::optional<double> roc_auc;
};

MetricBundle evaluate_scores(std::span<const double> scores,
                             std::span<const std::uint8_t> labels,
                             double threshold = kDecisionThreshold);

// For hard 0/1 detectors (no ROC-AUC).
MetricBundle evaluate_decisions(std::span<const std::uint8_t> predicted,
                                std::span<const std::uint8_t> labels);

}  // namespace irdist

#endif  // IRDIST_METRICS_HPP_
