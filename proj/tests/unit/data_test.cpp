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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "irdist/data.hpp"
#include "irdist/error.hpp"
#include "irdist/io.hpp"
#include "test_util.hpp"
#include "oracles.hpp"

namespace irdist {
namespace {

using testing::brute_force_windows;

using testing::flat_frame;
using testing::scratch_dir;

std::string csv_header() {
  std::string h = "session,frame";
  for (int i = 0; i < 64; ++i) h += ",p" + std::to_string(i);
  return h + ",people_count,hard_to_label\n";
}

std::string csv_row(int session, int frame, double temp, int people, int hard = 0) {
  std::string r = std::to_string(session) + "," + std::to_string(frame);
  for (int i = 0; i < 64; ++i) r += "," + format_double(temp, 2);
  return r + "," + std::to_string(people) + "," + std::to_string(hard) + "\n";
}

TEST(LoadTest, ReadsAndOrdersFrames) {
  const auto dir = scratch_dir("load");
  write_text_file(dir / "d.csv", csv_header() + csv_row(2, 1, 21.5, 2) + csv_row(1, 5, 20.0, 0) +
                                     csv_row(2, 0, 22.0, 1, 1));
  const auto r = load_dataset(dir / "d.csv");
  ASSERT_EQ(r.frames.size(), 3u);
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_EQ(r.frames[0].session_id, 1);
  EXPECT_EQ(r.frames[1].frame_index, 0);
  EXPECT_TRUE(r.frames[1].hard_to_label);
  EXPECT_EQ(r.frames[2].people_count, 2);
  EXPECT_FLOAT_EQ(r.frames[2].pixels[63], 21.5f);
  EXPECT_TRUE(r.frames[2].violation());
}

TEST(LoadTest, EmptyFileWarns) {
  const auto dir = scratch_dir("empty");
  write_text_file(dir / "e.csv", "");
  const auto r = load_dataset(dir / "e.csv");
  EXPECT_TRUE(r.frames.empty());
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(LoadTest, MissingColumnNamesKey) {
  const auto dir = scratch_dir("missing");
  write_text_file(dir / "m.csv", "session,frame,p0,hard_to_label\n1,0,20,0\n");
  try {
    load_dataset(dir / "m.csv");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "columns.people");
  }
}

TEST(LoadTest, BadValuesReportRow) {
  const auto dir = scratch_dir("bad");
  std::string bad_num = csv_row(1, 1, 20.0, 0);
  bad_num.replace(bad_num.find("20.00"), 5, "abc");
  write_text_file(dir / "n.csv", csv_header() + csv_row(1, 0, 20.0, 0) + bad_num);
  try {
    load_dataset(dir / "n.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
  write_text_file(dir / "t.csv", csv_header() + csv_row(1, 0, 75.0, 0));
  EXPECT_THROW(load_dataset(dir / "t.csv"), ParseError);
  write_text_file(dir / "d.csv", csv_header() + csv_row(1, 0, 20.0, 0) + csv_row(1, 0, 20.0, 0));
  EXPECT_THROW(load_dataset(dir / "d.csv"), InvalidArgumentError);
  EXPECT_THROW(load_dataset(dir / "nope.csv"), IoError);
}

TEST(LoadTest, CustomColumnMapping) {
  const auto dir = scratch_dir("mapping");
  std::string h = "t";
  for (int i = 0; i < 64; ++i) h += ",px_" + std::to_string(i) + "_c";
  h += ",count\n";
  std::string row = "0";
  for (int i = 0; i < 64; ++i) row += ",19.5";
  write_text_file(dir / "c.csv", h + row + ",3\n");
  ColumnMapping m;
  m.session = "";
  m.default_session = 4;
  m.frame = "t";
  m.pixel_pattern = "px_{}_c";
  m.people = "count";
  m.hard = "";
  const auto r = load_dataset(dir / "c.csv", m);
  ASSERT_EQ(r.frames.size(), 1u);
  EXPECT_EQ(r.frames[0].session_id, 4);
  EXPECT_EQ(r.frames[0].people_count, 3);
}

TEST(WindowTest, CountsFromExamples) {
  std::vector<Frame> frames;
  for (int i = 0; i < 10; ++i) frames.push_back(flat_frame(1, i, 20.0f));
  EXPECT_EQ(make_samples(frames, SampleVariant::windowed(8)).size(), 3u);
  frames[5].hard_to_label = true;
  EXPECT_EQ(make_samples(frames, SampleVariant::windowed(8)).size(), 0u);
  frames[2].hard_to_label = true;
  EXPECT_EQ(make_samples(frames, SampleVariant::single()).size(), 8u);
}

TEST(WindowTest, ChannelOrderAndLabel) {
  std::vector<Frame> frames;
  for (int i = 0; i < 8; ++i) frames.push_back(flat_frame(3, 100 + i, 20.0f + i, i == 7 ? 2 : 0));
  const auto s = make_samples(frames, SampleVariant::windowed(8));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].input.shape(), (Shape{8, 8, 8}));
  for (std::size_t k = 0; k < 8; ++k) EXPECT_FLOAT_EQ(s[0].input.at(4, 4, k), 20.0f + k);
  EXPECT_TRUE(s[0].label);
  EXPECT_EQ(s[0].first_frame, 100);
  EXPECT_EQ(s[0].last_frame, 107);
}

TEST(WindowTest, MatchesBruteForceEnumeration) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Frame> frames;
    const int sessions = 1 + static_cast<int>(rng.below(3));
    for (int s = 1; s <= sessions; ++s) {
      std::int64_t idx = static_cast<std::int64_t>(rng.below(5));
      const int n = static_cast<int>(rng.below(40));
      for (int i = 0; i < n; ++i) {
        idx += rng.bernoulli(0.05) ? 1 + static_cast<std::int64_t>(rng.below(3)) : 0;  // gaps
        frames.push_back(flat_frame(s, idx++, 20.0f, 0, rng.bernoulli(0.04)));
      }
    }
    for (std::size_t w : {1u, 2u, 5u, 8u}) {
      const auto samples = make_samples(frames, SampleVariant::windowed(w));
      ASSERT_EQ(samples.size(), brute_force_windows(frames, w)) << "trial " << trial << " w " << w;
      for (const auto& smp : samples) {
        EXPECT_EQ(smp.last_frame - smp.first_frame + 1, static_cast<std::int64_t>(w));
      }
    }
  }
}

TEST(WeightsTest, Examples) {
  std::vector<Sample> s(4);
  s[0].label = s[1].label = true;
  auto w = class_weights(s);
  EXPECT_DOUBLE_EQ(w.positive, 2.0);
  EXPECT_DOUBLE_EQ(w.negative, 2.0);

  std::vector<Sample> prior(1000);
  for (int i = 0; i < 343; ++i) prior[i].label = true;
  w = class_weights(prior);
  EXPECT_NEAR(w.positive, 2.915, 0.01);
  EXPECT_NEAR(w.negative, 1.522, 0.01);
  EXPECT_NEAR(1.0 / w.positive + 1.0 / w.negative, 1.0, 1e-12);

  std::vector<Sample> one(3);
  EXPECT_THROW(class_weights(one), InvalidArgumentError);
}

TEST(NormTest, ConstantDatasetIsDegenerate) {
  std::vector<Frame> frames;
  for (int i = 0; i < 5; ++i) frames.push_back(flat_frame(1, i, 20.0f, i % 3));
  const auto st = fit_normalization(frames);
  EXPECT_TRUE(st.degenerate);
  EXPECT_DOUBLE_EQ(st.stddev, 1.0);
  auto samples = make_samples(frames, SampleVariant::single());
  apply_normalization(st, samples);
  for (const auto& s : samples)
    for (float v : s.input.data()) EXPECT_FLOAT_EQ(v, 0.0f);
}

TEST(SplitTest, SessionsAreDisjointAndStatsComeFromTrain) {
  const auto frames = synth_generate(SynthSpec{}, 5);
  SplitSpec spec;
  spec.train_sessions = {1};
  spec.test_sessions = {2, 3, 4, 5};
  const auto split = build_split(frames, spec, SampleVariant::single());
  ASSERT_FALSE(split.val.empty());
  for (const auto& s : split.train) EXPECT_EQ(s.session_id, 1);
  for (const auto& s : split.val) EXPECT_EQ(s.session_id, 1);
  for (const auto& s : split.test) EXPECT_NE(s.session_id, 1);
  // Validation is the chronological tail.
  std::int64_t last_train = 0;
  for (const auto& s : split.train) last_train = std::max(last_train, s.last_frame);
  for (const auto& s : split.val) EXPECT_GT(s.last_frame, last_train);
  EXPECT_EQ(split.val.size(), 400u);

  // Transformed train pixels are standardized.
  double sum = 0, ss = 0, n = 0;
  for (const auto& s : split.train)
    for (float v : s.input.data()) {
      sum += v;
      ss += static_cast<double>(v) * v;
      ++n;
    }
  EXPECT_NEAR(sum / n, 0.0, 1e-6);
  EXPECT_NEAR(std::sqrt(ss / n - (sum / n) * (sum / n)), 1.0, 1e-5);

  // Test samples reuse train stats rather than their own.
  std::vector<Frame> test_frames;
  for (const auto& f : frames)
    if (f.session_id != 1) test_frames.push_back(f);
  const auto own = fit_normalization(test_frames);
  EXPECT_GT(std::abs(own.mean - split.norm.mean), 1e-3);
  auto raw = make_samples(test_frames, SampleVariant::single());
  apply_normalization(split.norm, raw);
  ASSERT_EQ(raw.size(), split.test.size());
  EXPECT_EQ(raw[17].input, split.test[17].input);
}

TEST(SplitTest, RejectsOverlapAndBadFraction) {
  SplitSpec s;
  s.train_sessions = {1, 2};
  s.test_sessions = {2};
  EXPECT_THROW(s.validate(), ConfigError);
  s.test_sessions = {3};
  s.val_fraction = 1.0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(SynthTest, DeterministicPerSeed) {
  const auto a = synth_generate(SynthSpec{}, 7), b = synth_generate(SynthSpec{}, 7);
  const auto c = synth_generate(SynthSpec{}, 8);
  EXPECT_EQ(dataset_fingerprint(a), dataset_fingerprint(b));
  EXPECT_NE(dataset_fingerprint(a), dataset_fingerprint(c));
  EXPECT_EQ(a.size(), 4000u);
}

TEST(SynthTest, NoPeopleMeansNoViolations) {
  SynthSpec spec;
  spec.sessions = {{300, 0}, {200, 0}};
  for (const auto& f : synth_generate(spec, 1)) {
    EXPECT_EQ(f.people_count, 0);
    EXPECT_FALSE(f.violation());
  }
}

// Monte Carlo over >= 10k person-frames: the hottest pixel near each person
// clears ambient + fixed pattern by 2 C.
TEST(SynthTest, BlobPeaksStandOut) {
  SynthSpec spec;
  spec.noise_sd = 0.0;
  spec.sessions = {{6000, 5}};
  spec.count_change_prob = 0.0;
  std::size_t frames_checked = 0, clear = 0;
  for (std::uint64_t seed = 0; seed < 40 && frames_checked < 10000; ++seed) {
    SynthSpec one = spec;
    one.peak_min = one.peak_max = 0.0;  // background-only twin, same RNG path
    const auto bg = synth_generate(one, seed);
    const auto with = synth_generate(spec, seed);
    for (std::size_t i = 0; i < with.size(); ++i) {
      if (with[i].people_count == 0) continue;
      float best = -1e9f;
      for (std::size_t p = 0; p < kPixels; ++p) best = std::max(best, with[i].pixels[p] - bg[i].pixels[p]);
      ++frames_checked;
      clear += best >= 2.0f - 0.01f ? 1 : 0;
    }
  }
  ASSERT_GE(frames_checked, 10000u);
  EXPECT_GE(static_cast<double>(clear) / static_cast<double>(frames_checked), 0.99);
}

TEST(CacheTest, RoundTripAndCsvAgree) {
  const auto dir = scratch_dir("cache");
  SynthSpec spec;
  spec.sessions = {{50, 3}, {30, 2}};
  spec.hard_fraction = 0.1;
  const auto frames = synth_generate(spec, 3);
  write_dataset_cache(dir / "d.irds", frames);
  write_dataset_csv(dir / "d.csv", frames);
  const auto cached = read_dataset_cache(dir / "d.irds");
  const auto csv = load_dataset(dir / "d.csv").frames;
  EXPECT_EQ(dataset_fingerprint(cached), dataset_fingerprint(frames));
  EXPECT_EQ(dataset_fingerprint(csv), dataset_fingerprint(frames));

  auto bytes = read_file_bytes(dir / "d.irds");
  bytes.pop_back();
  write_file_bytes(dir / "short.irds", bytes);
  EXPECT_THROW(read_dataset_cache(dir / "short.irds"), FormatError);
}

TEST(ManifestTest, DetectsTampering) {
  const auto dir = scratch_dir("manifest");
  write_text_file(dir / "a.csv", "x\n");
  const std::vector<std::filesystem::path> files{dir / "a.csv"};
  write_manifest(dir / "manifest.json", files);
  EXPECT_NO_THROW(verify_manifest(dir / "manifest.json"));
  write_text_file(dir / "a.csv", "y\n");
  EXPECT_THROW(verify_manifest(dir / "manifest.json"), ConfigError);
}

TEST(StatsTest, PerSession) {
  std::vector<Frame> frames{flat_frame(1, 0, 20, 0), flat_frame(1, 1, 20, 2),
                            flat_frame(1, 2, 20, 3, true), flat_frame(2, 0, 20, 1)};
  const auto st = session_stats(frames);
  ASSERT_EQ(st.size(), 2u);
  EXPECT_EQ(st[0].frames, 3u);
  EXPECT_EQ(st[0].hard, 1u);
  EXPECT_EQ(st[0].violations, 2u);
  EXPECT_NEAR(st[0].violation_percent(), 200.0 / 3.0, 1e-9);
  EXPECT_EQ(st[1].max_people, 1);
}

}  // namespace
}  // namespace irdist
