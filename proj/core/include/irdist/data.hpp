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

#ifndef IRDIST_DATA_HPP_
#define IRDIST_DATA_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "irdist/tensor.hpp"

namespace irdist {

inline constexpr std::size_t kPixels = 64;
inline constexpr float kMinPlausibleCelsius = 0.0f;
inline constexpr float kMaxPlausibleCelsius = 60.0f;

struct Frame {
  int session_id = 0;
  std::int64_t frame_index = 0;
  std::array<float, kPixels> pixels{};  // row-major 8x8, degrees Celsius
  int people_count = 0;
  bool hard_to_label = false;

  bool violation() const { return people_count >= 2; }
};

// Column names in the CSV header. pixel_pattern contains "{}" which is
// replaced by 0..63. Empty session/frame/hard names mean "absent": session
// then comes from default_session, frame from row order, hard is false.
struct ColumnMapping {
  std::string session = "session";
  std::string frame = "frame";
  std::string pixel_pattern = "p{}";
  std::string people = "people_count";
  std::string hard = "hard_to_label";
  int default_session = 1;
};

struct LoadResult {
  std::vector<Frame> frames;  // grouped by session, ordered by frame_index
  std::vector<std::string> warnings;
};

// Throws ConfigError for a missing column and ParseError (with the 1-based
// data row) for malformed or implausible values.
LoadResult load_dataset(const std::filesystem::path& path,
                        const ColumnMapping& mapping = {});
LoadResult load_datasets(std::span<const std::filesystem::path> paths,
                         const ColumnMapping& mapping = {});

// Sorts by (session, frame_index); throws InvalidArgumentError on a
// duplicate frame_index within a session.
void group_and_order(std::vector<Frame>& frames);

void write_dataset_csv(const std::filesystem::path& path, std::span<const Frame> frames);

// Binary cache, little-endian (docs/dataset_cache.md):
//   "IRDS" u16 version u32 count, then per frame
//   i32 session i64 frame_index i32 people u8 hard f32[64] pixels
void write_dataset_cache(const std::filesystem::path& path, std::span<const Frame> frames);
std::vector<Frame> read_dataset_cache(const std::filesystem::path& path);
std::vector<unsigned char> encode_dataset_cache(std::span<const Frame> frames);

// Hex FNV-1a-64 of the binary cache encoding; independent of source format.
std::string dataset_fingerprint(std::span<const Frame> frames);
std::string file_fingerprint(const std::filesystem::path& path);

// Manifest: {"files": [{"path": "...", "fnv1a64": "<hex>"}]}, paths relative
// to the manifest. Throws ConfigError naming the first mismatching file.
void verify_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest,
                    std::span<const std::filesystem::path> files);

struct SampleVariant {
  enum class Kind { kSingle, kWindowed } kind = Kind::kSingle;
  std::size_t window = 8;

  static SampleVariant single() { return {Kind::kSingle, 1}; }
  static SampleVariant windowed(std::size_t w = 8) { return {Kind::kWindowed, w}; }
  std::size_t channels() const { return kind == Kind::kSingle ? 1 : window; }
};

struct Sample {
  Tensor input;  // (8, 8, 1) or (8, 8, W); channel k holds frame first + k
  bool label = false;
  int session_id = 0;
  std::int64_t first_frame = 0;
  std::int64_t last_frame = 0;
};

// Frames must be grouped and ordered. Windows use stride 1, never cross a
// session or a frame_index gap, and are dropped if they touch a
// hard-to-label frame. The label is that of the last frame.
std::vector<Sample> make_samples(std::span<const Frame> frames, SampleVariant variant);

struct ClassWeights {
  double positive = 1.0;
  double negative = 1.0;
};

// Inverse class frequencies. Throws InvalidArgumentError on a single class.
ClassWeights class_weights(std::span<const Sample> samples);

struct NormStats {
  double mean = 0.0;
  double stddev = 1.0;
  bool degenerate = false;  // zero spread; unit divisor used
};

// Population mean and standard deviation over every pixel.
NormStats fit_normalization(std::span<const Frame> frames);
void apply_normalization(const NormStats& stats, std::span<Sample> samples);
void apply_normalization(const NormStats& stats, Tensor& input);

struct SplitSpec {
  std::set<int> train_sessions{1};
  std::set<int> test_sessions{2, 3, 4, 5, 6};
  double val_fraction = 0.2;

  void validate() const;
};

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
  NormStats norm;
  ClassWeights weights;
  SampleVariant variant;
};

// Per session of train_sessions, the chronologically last val_fraction of
// samples (by last frame) becomes validation. Normalization statistics come
// from the frames covered by training samples only; class weights from the
// training samples only.
DatasetSplit build_split(std::span<const Frame> frames, const SplitSpec& spec,
                         SampleVariant variant);

struct SynthSession {
  std::size_t frames = 500;
  int max_people = 3;
};

struct SynthSpec {
  std::vector<SynthSession> sessions{{2000, 4}, {500, 2}, {500, 3}, {500, 5}, {500, 3}};
  double background_mean = 20.0;  // per-session ambient ~ N(mean, sd)
  double background_sd = 0.5;
  double fixed_pattern_sd = 0.1;  // static per-pixel offset within a session
  double peak_min = 4.0;
  double peak_max = 8.0;
  double sigma_min = 0.7;
  double sigma_max = 1.2;
  double noise_sd = 0.3;
  double count_change_prob = 0.03;  // per frame, +-1 person
  double step_sd = 0.15;            // random-walk step, pixels
  double min_separation = 2.0;      // pixels between blob centres
  double hard_fraction = 0.0;
  double resolution = 0.01;  // output rounding; matches the CSV precision, 0 disables
};

// Deterministic in (spec, seed). Session ids are 1..sessions.size().
std::vector<Frame> synth_generate(const SynthSpec& spec, std::uint64_t seed);

struct SessionStats {
  int session_id = 0;
  std::size_t frames = 0;
  std::size_t hard = 0;
  std::size_t violations = 0;  // among all frames
  int min_people = 0;
  int max_people = 0;
  double violation_percent() const {
    return frames ? 100.0 * static_cast<double>(violations) / static_cast<double>(frames) : 0.0;
  }
};

std::vector<SessionStats> session_stats(std::span<const Frame> frames);

}  // namespace irdist

#endif  // IRDIST_DATA_HPP_
