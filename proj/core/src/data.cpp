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

#include "irdist/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <optional>

#include "binary_io.hpp"
#include "irdist/arch.hpp"
#include "irdist/error.hpp"
#include "irdist/io.hpp"
#include "irdist/rng.hpp"

namespace irdist {

namespace {

constexpr char kCacheMagic[4] = {'I', 'R', 'D', 'S'};
constexpr std::uint16_t kCacheVersion = 1;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_number(const std::string& text, std::size_t row, const std::string& column) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw ParseError(row, "column '" + column + "': not a number: '" + text + "'");
  }
  return v;
}

bool parse_flag(const std::string& text, std::size_t row, const std::string& column) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t.empty() || t == "0" || t == "false" || t == "no") return false;
  if (t == "1" || t == "true" || t == "yes") return true;
  throw ParseError(row, "column '" + column + "': not a boolean: '" + text + "'");
}

std::string pixel_column(const std::string& pattern, std::size_t i) {
  std::string out = pattern;
  const auto pos = out.find("{}");
  if (pos == std::string::npos) return out + std::to_string(i);
  return out.replace(pos, 2, std::to_string(i));
}

}  // namespace

void group_and_order(std::vector<Frame>& frames) {
  std::stable_sort(frames.begin(), frames.end(), [](const Frame& a, const Frame& b) {
    if (a.session_id != b.session_id) return a.session_id < b.session_id;
    return a.frame_index < b.frame_index;
  });
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].session_id == frames[i - 1].session_id &&
        frames[i].frame_index == frames[i - 1].frame_index) {
      throw InvalidArgumentError("duplicate frame_index " +
                                 std::to_string(frames[i].frame_index) + " in session " +
                                 std::to_string(frames[i].session_id));
    }
  }
}

LoadResult load_dataset(const std::filesystem::path& path, const ColumnMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  LoadResult result;
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    result.warnings.push_back("dataset " + path.string() + " is empty");
    return result;
  }
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index[trim(header[i])] = i;

  const auto column = [&](const std::string& name, const std::string& key) -> std::size_t {
    const auto it = index.find(name);
    if (it == index.end()) {
      throw ConfigError(key, "column '" + name + "' not found in " + path.string());
    }
    return it->second;
  };
  const auto optional_column = [&](const std::string& name,
                                   const std::string& key) -> std::optional<std::size_t> {
    if (name.empty()) return std::nullopt;
    return column(name, key);
  };

  const auto session_col = optional_column(mapping.session, "columns.session");
  const auto frame_col = optional_column(mapping.frame, "columns.frame");
  const auto hard_col = optional_column(mapping.hard, "columns.hard");
  const std::size_t people_col = column(mapping.people, "columns.people");
  std::array<std::size_t, kPixels> pixel_cols{};
  std::array<std::string, kPixels> pixel_names;
  for (std::size_t i = 0; i < kPixels; ++i) {
    pixel_names[i] = pixel_column(mapping.pixel_pattern, i);
    pixel_cols[i] = column(pixel_names[i], "columns.pixel_pattern");
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < header.size()) {
      throw ParseError(row, "expected " + std::to_string(header.size()) + " fields, got " +
                                std::to_string(fields.size()));
    }
    Frame f;
    f.session_id = session_col
                       ? static_cast<int>(parse_number(fields[*session_col], row, mapping.session))
                       : mapping.default_session;
    f.frame_index = frame_col ? static_cast<std::int64_t>(
                                    parse_number(fields[*frame_col], row, mapping.frame))
                              : static_cast<std::int64_t>(row - 1);
    for (std::size_t i = 0; i < kPixels; ++i) {
      const double v = parse_number(fields[pixel_cols[i]], row, pixel_names[i]);
      if (v < kMinPlausibleCelsius || v > kMaxPlausibleCelsius) {
        throw ParseError(row, "column '" + pixel_names[i] + "': temperature " +
                                  std::to_string(v) + " outside [0, 60] C");
      }
      f.pixels[i] = static_cast<float>(v);
    }
    const double people = parse_number(fields[people_col], row, mapping.people);
    if (people < 0 || people != std::floor(people)) {
      throw ParseError(row, "column '" + mapping.people + "': count must be a non-negative integer");
    }
    f.people_count = static_cast<int>(people);
    f.hard_to_label = hard_col ? parse_flag(fields[*hard_col], row, mapping.hard) : false;
    result.frames.push_back(f);
  }
  if (result.frames.empty()) {
    result.warnings.push_back("dataset " + path.string() + " has no data rows");
  }
  group_and_order(result.frames);
  return result;
}

LoadResult load_datasets(std::span<const std::filesystem::path> paths,
                         const ColumnMapping& mapping) {
  LoadResult all;
  for (const auto& p : paths) {
    auto r = load_dataset(p, mapping);
    all.frames.insert(all.frames.end(), r.frames.begin(), r.frames.end());
    all.warnings.insert(all.warnings.end(), r.warnings.begin(), r.warnings.end());
  }
  group_and_order(all.frames);
  return all;
}

void write_dataset_csv(const std::filesystem::path& path, std::span<const Frame> frames) {
  std::string out = "session,frame";
  for (std::size_t i = 0; i < kPixels; ++i) out += ",p" + std::to_string(i);
  out += ",people_count,hard_to_label\n";
  char buf[32];
  for (const Frame& f : frames) {
    out += std::to_string(f.session_id) + "," + std::to_string(f.frame_index);
    for (float v : f.pixels) {
      std::snprintf(buf, sizeof buf, ",%.2f", static_cast<double>(v));
      out += buf;
    }
    out += "," + std::to_string(f.people_count) + "," + (f.hard_to_label ? "1" : "0") + "\n";
  }
  write_text_file(path, out);
}

std::vector<unsigned char> encode_dataset_cache(std::span<const Frame> frames) {
  detail::ByteWriter w;
  w.raw({reinterpret_cast<const unsigned char*>(kCacheMagic), 4});
  w.u16(kCacheVersion);
  w.u32(static_cast<std::uint32_t>(frames.size()));
  for (const Frame& f : frames) {
    w.i32(f.session_id);
    w.i64(f.frame_index);
    w.i32(f.people_count);
    w.u8(f.hard_to_label ? 1 : 0);
    for (float v : f.pixels) w.f32(v);
  }
  return std::move(w.bytes());
}

void write_dataset_cache(const std::filesystem::path& path, std::span<const Frame> frames) {
  write_file_bytes(path, encode_dataset_cache(frames));
}

std::vector<Frame> read_dataset_cache(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  detail::ByteReader r(bytes);
  if (r.str(4) != std::string(kCacheMagic, 4)) throw FormatError("not a dataset cache: " + path.string());
  const auto version = r.u16();
  if (version != kCacheVersion) {
    throw FormatError("unsupported dataset cache version " + std::to_string(version));
  }
  const std::uint32_t n = r.u32();
  std::vector<Frame> frames(n);
  for (Frame& f : frames) {
    f.session_id = r.i32();
    f.frame_index = r.i64();
    f.people_count = r.i32();
    f.hard_to_label = r.u8() != 0;
    for (float& v : f.pixels) v = r.f32();
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in dataset cache");
  return frames;
}

std::string dataset_fingerprint(std::span<const Frame> frames) {
  return hex64(fnv1a64(encode_dataset_cache(frames)));
}

std::string file_fingerprint(const std::filesystem::path& path) {
  return hex64(fnv1a64(read_file_bytes(path)));
}

void verify_manifest(const std::filesystem::path& manifest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest", std::string("invalid JSON: ") + e.what());
  }
  if (!j.contains("files") || !j["files"].is_array()) {
    throw ConfigError("manifest.files", "missing array");
  }
  const auto base = manifest.parent_path();
  for (const auto& entry : j["files"]) {
    const std::string rel = entry.value("path", "");
    const std::string want = entry.value("fnv1a64", "");
    const auto got = file_fingerprint(base / rel);
    if (got != want) {
      throw ConfigError("manifest.files", rel + ": hash " + got + " != pinned " + want);
    }
  }
}

void write_manifest(const std::filesystem::path& manifest,
                    std::span<const std::filesystem::path> files) {
  nlohmann::json j;
  j["files"] = nlohmann::json::array();
  const auto base = manifest.parent_path();
  for (const auto& f : files) {
    j["files"].push_back({{"path", std::filesystem::relative(f, base.empty() ? "." : base).generic_string()},
                          {"fnv1a64", file_fingerprint(f)}});
  }
  write_text_file(manifest, j.dump(2) + "\n");
}

std::vector<Sample> make_samples(std::span<const Frame> frames, SampleVariant variant) {
  std::vector<Sample> out;
  const std::size_t w = variant.kind == SampleVariant::Kind::kSingle ? 1 : variant.window;
  if (w == 0) throw InvalidArgumentError("make_samples: window must be >= 1");
  // Clean run = consecutive frame indices in one session, none hard.
  std::size_t run_start = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    const bool continues = i > 0 && frames[i - 1].session_id == f.session_id &&
                           frames[i - 1].frame_index + 1 == f.frame_index &&
                           !frames[i - 1].hard_to_label;
    if (!continues) run_start = i;
    if (f.hard_to_label) {
      run_start = i + 1;
      continue;
    }
    if (i + 1 - run_start < w) continue;
    const std::size_t first = i + 1 - w;
    Sample s;
    s.input = Tensor({kFrameSide, kFrameSide, w});
    for (std::size_t k = 0; k < w; ++k) {
      const auto& px = frames[first + k].pixels;
      for (std::size_t p = 0; p < kPixels; ++p) s.input[p * w + k] = px[p];
    }
    s.label = f.violation();
    s.session_id = f.session_id;
    s.first_frame = frames[first].frame_index;
    s.last_frame = f.frame_index;
    out.push_back(std::move(s));
  }
  return out;
}

ClassWeights class_weights(std::span<const Sample> samples) {
  std::size_t pos = 0;
  for (const Sample& s : samples) pos += s.label ? 1 : 0;
  const std::size_t neg = samples.size() - pos;
  if (pos == 0 || neg == 0) {
    throw InvalidArgumentError("class_weights: training set contains a single class");
  }
  const double n = static_cast<double>(samples.size());
  return {n / static_cast<double>(pos), n / static_cast<double>(neg)};
}

NormStats fit_normalization(std::span<const Frame> frames) {
  NormStats st;
  if (frames.empty()) {
    st.degenerate = true;
    return st;
  }
  double sum = 0.0;
  for (const Frame& f : frames)
    for (float v : f.pixels) sum += v;
  const double n = static_cast<double>(frames.size() * kPixels);
  st.mean = sum / n;
  double ss = 0.0;
  for (const Frame& f : frames)
    for (float v : f.pixels) ss += (v - st.mean) * (v - st.mean);
  st.stddev = std::sqrt(ss / n);
  if (!(st.stddev > 1e-12)) {
    st.stddev = 1.0;
    st.degenerate = true;
  }
  return st;
}

void apply_normalization(const NormStats& stats, Tensor& input) {
  const double inv = 1.0 / stats.stddev;
  for (float& v : input.data()) v = static_cast<float>((v - stats.mean) * inv);
}

void apply_normalization(const NormStats& stats, std::span<Sample> samples) {
  for (Sample& s : samples) apply_normalization(stats, s.input);
}

void SplitSpec::validate() const {
  for (int s : train_sessions) {
    if (test_sessions.count(s)) {
      throw ConfigError("split", "session " + std::to_string(s) + " is in both train and test");
    }
  }
  if (train_sessions.empty()) throw ConfigError("split.train_sessions", "empty");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ConfigError("split.val_fraction", "must be in [0, 1)");
  }
}

DatasetSplit build_split(std::span<const Frame> frames, const SplitSpec& spec,
                         SampleVariant variant) {
  spec.validate();
  DatasetSplit split;
  split.variant = variant;
  auto samples = make_samples(frames, variant);

  // Per-session chronological cut, by last frame.
  std::map<int, std::vector<std::size_t>> train_by_session;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (spec.train_sessions.count(samples[i].session_id)) {
      train_by_session[samples[i].session_id].push_back(i);
    }
  }
  std::map<int, std::int64_t> cut;  // last frame index covered by a train sample
  std::vector<std::uint8_t> role(samples.size(), 0);  // 0 none, 1 train, 2 val, 3 test
  for (auto& [session, idx] : train_by_session) {
    const std::size_t n_val = static_cast<std::size_t>(
        std::floor(static_cast<double>(idx.size()) * spec.val_fraction));
    const std::size_t n_train = idx.size() - n_val;
    for (std::size_t k = 0; k < idx.size(); ++k) role[idx[k]] = k < n_train ? 1 : 2;
    if (n_train > 0) cut[session] = samples[idx[n_train - 1]].last_frame;
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (spec.test_sessions.count(samples[i].session_id)) role[i] = 3;
  }

  std::vector<Frame> stat_frames;
  for (const Frame& f : frames) {
    const auto it = cut.find(f.session_id);
    if (it != cut.end() && !f.hard_to_label && f.frame_index <= it->second) {
      stat_frames.push_back(f);
    }
  }
  split.norm = fit_normalization(stat_frames);

  for (std::size_t i = 0; i < samples.size(); ++i) {
    switch (role[i]) {
      case 1: split.train.push_back(std::move(samples[i])); break;
      case 2: split.val.push_back(std::move(samples[i])); break;
      case 3: split.test.push_back(std::move(samples[i])); break;
      default: break;
    }
  }
  if (split.train.empty()) {
    throw InvalidArgumentError("build_split: no training samples in the train sessions");
  }
  apply_normalization(split.norm, split.train);
  apply_normalization(split.norm, split.val);
  apply_normalization(split.norm, split.test);
  split.weights = class_weights(split.train);
  return split;
}

namespace {

struct Person {
  double x, y, peak, sigma;
};

bool far_enough(const std::vector<Person>& people, double x, double y, double min_sep,
                std::size_t skip) {
  for (std::size_t i = 0; i < people.size(); ++i) {
    if (i == skip) continue;
    const double dx = people[i].x - x, dy = people[i].y - y;
    if (dx * dx + dy * dy < min_sep * min_sep) return false;
  }
  return true;
}

double reflect(double v, double lo, double hi) {
  if (v < lo) v = 2 * lo - v;
  if (v > hi) v = 2 * hi - v;
  return std::clamp(v, lo, hi);
}

}  // namespace

std::vector<Frame> synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  constexpr double kLo = 0.0, kHi = static_cast<double>(kFrameSide - 1);
  std::vector<Frame> frames;
  Rng root(seed);
  for (std::size_t s = 0; s < spec.sessions.size(); ++s) {
    const auto& sess = spec.sessions[s];
    Rng rng = root.split("session-" + std::to_string(s + 1));
    const double ambient = rng.normal(spec.background_mean, spec.background_sd);
    std::array<double, kPixels> pattern{};
    for (double& p : pattern) p = rng.normal(0.0, spec.fixed_pattern_sd);

    const auto spawn = [&](std::vector<Person>& people) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        const double x = rng.uniform(kLo, kHi), y = rng.uniform(kLo, kHi);
        if (far_enough(people, x, y, spec.min_separation, people.size())) {
          people.push_back({x, y, rng.uniform(spec.peak_min, spec.peak_max),
                            rng.uniform(spec.sigma_min, spec.sigma_max)});
          return;
        }
      }
    };

    std::vector<Person> people;
    const int max_people = std::max(0, sess.max_people);
    const int initial = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_people) + 1));
    for (int i = 0; i < initial; ++i) spawn(people);

    for (std::size_t t = 0; t < sess.frames; ++t) {
      if (max_people > 0 && rng.bernoulli(spec.count_change_prob)) {
        const bool up = rng.bernoulli(0.5);
        const int n = static_cast<int>(people.size());
        if (up && n < max_people) {
          spawn(people);
        } else if (!up && n > 0) {
          people.erase(people.begin() + static_cast<std::ptrdiff_t>(rng.below(people.size())));
        }
      }
      for (std::size_t i = 0; i < people.size(); ++i) {
        const double nx = reflect(people[i].x + rng.normal(0.0, spec.step_sd), kLo, kHi);
        const double ny = reflect(people[i].y + rng.normal(0.0, spec.step_sd), kLo, kHi);
        if (far_enough(people, nx, ny, spec.min_separation, i)) {
          people[i].x = nx;
          people[i].y = ny;
        }
      }
      Frame f;
      f.session_id = static_cast<int>(s + 1);
      f.frame_index = static_cast<std::int64_t>(t);
      f.people_count = static_cast<int>(people.size());
      for (std::size_t r = 0; r < kFrameSide; ++r) {
        for (std::size_t c = 0; c < kFrameSide; ++c) {
          double v = ambient + pattern[r * kFrameSide + c];
          for (const Person& p : people) {
            const double dy = static_cast<double>(r) - p.y, dx = static_cast<double>(c) - p.x;
            v += p.peak * std::exp(-(dx * dx + dy * dy) / (2.0 * p.sigma * p.sigma));
          }
          v += rng.normal(0.0, spec.noise_sd);
          v = std::clamp(v, double{kMinPlausibleCelsius}, double{kMaxPlausibleCelsius});
          if (spec.resolution > 0.0) v = std::round(v / spec.resolution) * spec.resolution;
          f.pixels[r * kFrameSide + c] = static_cast<float>(v);
        }
      }
      f.hard_to_label = spec.hard_fraction > 0.0 && rng.bernoulli(spec.hard_fraction);
      frames.push_back(f);
    }
  }
  return frames;
}

std::vector<SessionStats> session_stats(std::span<const Frame> frames) {
  std::map<int, SessionStats> by;
  for (const Frame& f : frames) {
    auto [it, fresh] = by.try_emplace(f.session_id);
    SessionStats& st = it->second;
    if (fresh) {
      st.session_id = f.session_id;
      st.min_people = st.max_people = f.people_count;
    }
    ++st.frames;
    st.hard += f.hard_to_label ? 1 : 0;
    st.violations += f.violation() ? 1 : 0;
    st.min_people = std::min(st.min_people, f.people_count);
    st.max_people = std::max(st.max_people, f.people_count);
  }
  std::vector<SessionStats> out;
  for (auto& [_, st] : by) out.push_back(st);
  return out;
}

}  // namespace irdist
