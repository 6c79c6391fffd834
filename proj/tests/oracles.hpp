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

// Slow, obviously-correct reference implementations shared by the unit and
// acceptance tests.
#ifndef IRDIST_TESTS_ORACLES_HPP_
#define IRDIST_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "irdist/data.hpp"
#include "irdist/search.hpp"

namespace irdist::testing {

// Probability that a random positive outscores a random negative, ties half.
inline double pair_count_auc(std::span<const double> s, std::span<const std::uint8_t> y) {
  double wins = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      ++pairs;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / static_cast<double>(pairs);
}

// Windows whose W frames all exist consecutively in one session and are clean.
inline std::size_t brute_force_windows(std::span<const Frame> frames, std::size_t w) {
  std::set<std::pair<int, std::int64_t>> clean;
  for (const auto& f : frames) {
    if (!f.hard_to_label) clean.insert({f.session_id, f.frame_index});
  }
  std::size_t count = 0;
  for (const auto& f : frames) {
    bool ok = true;
    for (std::size_t k = 0; k < w && ok; ++k) {
      ok = clean.count({f.session_id, f.frame_index - static_cast<std::int64_t>(k)}) > 0;
    }
    count += ok ? 1 : 0;
  }
  return count;
}

// Names of the points nothing dominates; among exact duplicates only the
// smallest name survives. Sorted.
inline std::vector<std::string> brute_force_front(std::span<const ParetoPoint> p) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < p.size() && keep; ++j) {
      if (i == j) continue;
      const bool weak = p[j].cost <= p[i].cost && p[j].accuracy >= p[i].accuracy;
      const bool strict = p[j].cost < p[i].cost || p[j].accuracy > p[i].accuracy;
      if (weak && (strict || p[j].name < p[i].name)) keep = false;
    }
    if (keep) out.push_back(p[i].name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace irdist::testing

#endif  // IRDIST_TESTS_ORACLES_HPP_
