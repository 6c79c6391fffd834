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

#include "irdist/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "irdist/error.hpp"

namespace irdist {

void Confusion::add(bool predicted, bool actual) {
  if (actual) {
    predicted ? ++tp : ++fn;
  } else {
    predicted ? ++fp : ++tn;
  }
}

Confusion confusion_from_scores(std::span<const double> scores,
                                std::span<const std::uint8_t> labels,
                                double threshold) {
  if (scores.size() != labels.size()) {
    throw InvalidArgumentError("confusion: scores/labels length mismatch");
  }
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    c.add(scores[i] >= threshold, labels[i] != 0);
  }
  return c;
}

double balanced_accuracy(const Confusion& c) {
  if (c.tp + c.fn == 0 || c.tn + c.fp == 0) {
    throw UndefinedMetricError("balanced accuracy needs both classes present");
  }
  const double sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return 0.5 * (sensitivity + specificity);
}

double accuracy(const Confusion& c) {
  if (c.total() == 0) throw UndefinedMetricError("accuracy of an empty set");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double f1_score(const Confusion& c) {
  const std::uint64_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) throw UndefinedMetricError("F1 with no positives predicted or present");
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw InvalidArgumentError("roc_auc: scores/labels length mismatch");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::uint64_t positives = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    // 1-based ranks i+1 .. j+1 share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) {
        positive_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j + 1;
  }
  const std::uint64_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetricError("roc_auc needs both classes present");
  }
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

namespace {

template <typename F>
std::optional<double> try_metric(F&& f) {
  try {
    return f();
  } catch (const UndefinedMetricError&) {
    return std::nullopt;
  }
}

void fill_confusion_metrics(MetricBundle& m) {
  m.balanced_accuracy = try_metric([&] { return balanced_accuracy(m.confusion); });
  m.accuracy = try_metric([&] { return accuracy(m.confusion); });
  m.f1 = try_metric([&] { return f1_score(m.confusion); });
}

}  // namespace

MetricBundle evaluate_scores(std::span<const double> scores,
                             std::span<const std::uint8_t> labels, double threshold) {
  MetricBundle m;
  m.confusion = confusion_from_scores(scores, labels, threshold);
  fill_confusion_metrics(m);
  m.roc_auc = try_metric([&] { return roc_auc(scores, labels); });
  return m;
}

MetricBundle evaluate_decisions(std::span<const std::uint8_t> predicted,
                                std::span<const std::uint8_t> labels) {
  if (predicted.size() != labels.size()) {
    throw InvalidArgumentError("evaluate_decisions: length mismatch");
  }
  MetricBundle m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m.confusion.add(predicted[i] != 0, labels[i] != 0);
  }
  fill_confusion_metrics(m);
  return m;
}

}  // namespace irdist
