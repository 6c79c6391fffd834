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

#include "run_config.hpp"

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "irdist/error.hpp"

namespace irdist::cli {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key, "wrong type");
  }
}

void expect_object(const json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError(key, "must be an object");
}

std::set<int> sessions_from(const json& j, const std::string& key) {
  if (j.is_string()) return parse_sessions(j.get<std::string>(), key);
  std::set<int> out;
  for (int v : get_as<std::vector<int>>(j, key)) out.insert(v);
  return out;
}

void apply_columns(ColumnMapping& m, const json& j) {
  expect_object(j, "columns");
  for (const auto& [k, v] : j.items()) {
    const std::string key = "columns." + k;
    if (k == "session") m.session = get_as<std::string>(v, key);
    else if (k == "frame") m.frame = get_as<std::string>(v, key);
    else if (k == "pixels") m.pixel_pattern = get_as<std::string>(v, key);
    else if (k == "people") m.people = get_as<std::string>(v, key);
    else if (k == "hard") m.hard = get_as<std::string>(v, key);
    else if (k == "default_session") m.default_session = get_as<int>(v, key);
    else throw ConfigError(key, "unknown key");
  }
}

void apply_split(SplitSpec& s, const json& j) {
  expect_object(j, "split");
  for (const auto& [k, v] : j.items()) {
    const std::string key = "split." + k;
    if (k == "train") s.train_sessions = sessions_from(v, key);
    else if (k == "test") s.test_sessions = sessions_from(v, key);
    else if (k == "val_fraction") s.val_fraction = get_as<double>(v, key);
    else throw ConfigError(key, "unknown key");
  }
}

void apply_train(TrainConfig& t, const json& j) {
  expect_object(j, "train");
  for (const auto& [k, v] : j.items()) {
    const std::string key = "train." + k;
    if (k == "max_epochs") t.max_epochs = get_as<int>(v, key);
    else if (k == "early_stop_patience") t.early_stop_patience = get_as<int>(v, key);
    else if (k == "initial_lr") t.initial_lr = get_as<double>(v, key);
    else if (k == "plateau_factor") t.plateau_factor = get_as<double>(v, key);
    else if (k == "plateau_patience") t.plateau_patience = get_as<int>(v, key);
    else if (k == "min_delta") t.min_delta = get_as<double>(v, key);
    else if (k == "min_lr") t.min_lr = get_as<double>(v, key);
    else if (k == "batch_size") t.batch_size = get_as<std::size_t>(v, key);
    else if (k == "seed") t.seed = get_as<std::uint64_t>(v, key);
    else throw ConfigError(key, "unknown key");
  }
}

void apply_baseline(BaselineConfig& b, const json& j) {
  expect_object(j, "baseline");
  for (const auto& [k, v] : j.items()) {
    const std::string key = "baseline." + k;
    if (k == "bg_window") b.bg_window = get_as<std::size_t>(v, key);
    else if (k == "delta") b.delta_threshold = get_as<double>(v, key);
    else if (k == "min_blob_area") b.min_blob_area = get_as<std::size_t>(v, key);
    else throw ConfigError(key, "unknown key");
  }
}

void apply_mount(MountSpec& m, const json& j) {
  expect_object(j, "geometry");
  for (const auto& [k, v] : j.items()) {
    const std::string key = "geometry." + k;
    if (k == "height") m.sensor_height = get_as<double>(v, key);
    else if (k == "head_height") m.min_head_height = get_as<double>(v, key);
    else if (k == "view_angle") m.view_angle = get_as<double>(v, key);
    else throw ConfigError(key, "unknown key");
  }
}

int parse_int(const std::string& s, const std::string& key) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, "not an integer: '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError(key, "not an integer: '" + s + "'");
  return v;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::set<int> parse_sessions(const std::string& text, const std::string& key) {
  std::set<int> out;
  for (const auto& part : split_commas(text)) {
    if (part.empty()) throw ConfigError(key, "empty session id");
    const auto dash = part.find('-', 1);
    if (dash == std::string::npos) {
      out.insert(parse_int(part, key));
      continue;
    }
    const int lo = parse_int(part.substr(0, dash), key);
    const int hi = parse_int(part.substr(dash + 1), key);
    if (hi < lo) throw ConfigError(key, "empty range '" + part + "'");
    for (int s = lo; s <= hi; ++s) out.insert(s);
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text, const std::string& key) {
  std::vector<std::uint64_t> out;
  for (int s : parse_sessions(text, key)) {
    if (s < 0) throw ConfigError(key, "seeds must be non-negative");
    out.push_back(static_cast<std::uint64_t>(s));
  }
  return out;
}

SampleVariant parse_variant(const std::string& text, const std::string& key) {
  if (text == "single") return SampleVariant::single();
  if (text == "window8") return SampleVariant::windowed(8);
  throw ConfigError(key, "must be 'single' or 'window8', got '" + text + "'");
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("config file is not valid JSON: ") + e.what());
  }
  expect_object(j, "config");
  for (const auto& [k, v] : j.items()) {
    if (k == "data") {
      cfg.data.clear();
      if (v.is_string()) cfg.data.emplace_back(v.get<std::string>());
      else for (const auto& p : get_as<std::vector<std::string>>(v, k)) cfg.data.emplace_back(p);
    } else if (k == "synthetic") {
      cfg.synthetic = get_as<bool>(v, k);
    } else if (k == "synth_seed") {
      cfg.synth_seed = get_as<std::uint64_t>(v, k);
    } else if (k == "columns") {
      apply_columns(cfg.columns, v);
    } else if (k == "split") {
      apply_split(cfg.split, v);
    } else if (k == "train") {
      apply_train(cfg.train, v);
    } else if (k == "grid") {
      cfg.grid = get_as<std::string>(v, k);
    } else if (k == "seeds") {
      cfg.seeds = v.is_string() ? parse_seeds(v.get<std::string>(), k)
                                : get_as<std::vector<std::uint64_t>>(v, k);
    } else if (k == "out") {
      cfg.out = get_as<std::string>(v, k);
    } else if (k == "workers") {
      cfg.workers = get_as<std::size_t>(v, k);
    } else if (k == "variant") {
      cfg.variant = get_as<std::string>(v, k);
      parse_variant(*cfg.variant, k);
    } else if (k == "arch") {
      cfg.arch = get_as<std::string>(v, k);
    } else if (k == "qat") {
      cfg.qat = get_as<bool>(v, k);
    } else if (k == "baseline") {
      apply_baseline(cfg.baseline, v);
    } else if (k == "geometry") {
      apply_mount(cfg.mount, v);
    } else {
      throw ConfigError(k, "unknown key '" + k + "'");
    }
  }
}

std::string RunConfig::to_json() const {
  json j;
  std::vector<std::string> paths;
  for (const auto& p : data) paths.push_back(p.string());
  j["data"] = paths;
  j["synthetic"] = synthetic;
  j["synth_seed"] = synth_seed;
  j["columns"] = {{"session", columns.session},
                  {"frame", columns.frame},
                  {"pixels", columns.pixel_pattern},
                  {"people", columns.people},
                  {"hard", columns.hard},
                  {"default_session", columns.default_session}};
  j["split"] = {{"train", split.train_sessions},
                {"test", split.test_sessions},
                {"val_fraction", split.val_fraction}};
  j["train"] = {{"max_epochs", train.max_epochs},
                {"early_stop_patience", train.early_stop_patience},
                {"initial_lr", train.initial_lr},
                {"plateau_factor", train.plateau_factor},
                {"plateau_patience", train.plateau_patience},
                {"min_delta", train.min_delta},
                {"min_lr", train.min_lr},
                {"batch_size", train.batch_size},
                {"seed", train.seed}};
  j["grid"] = grid;
  j["seeds"] = seeds;
  j["out"] = out.string();
  j["workers"] = workers;
  j["variant"] = variant ? json(*variant) : json(nullptr);
  j["arch"] = arch ? json(*arch) : json(nullptr);
  j["qat"] = qat;
  j["baseline"] = {{"bg_window", baseline.bg_window},
                   {"delta", baseline.delta_threshold},
                   {"min_blob_area", baseline.min_blob_area}};
  j["geometry"] = {{"height", mount.sensor_height},
                   {"head_height", mount.min_head_height},
                   {"view_angle", mount.view_angle}};
  // Null optionals are not accepted back by apply_config_text; drop them.
  if (!variant) j.erase("variant");
  if (!arch) j.erase("arch");
  return j.dump(2) + "\n";
}

std::filesystem::path default_out_dir(const std::string& command) {
  if (const char* root = std::getenv(kOutRootEnv); root && *root) {
    return std::filesystem::path(root) / command;
  }
  return std::filesystem::path("irdist_out") / command;
}

}  // namespace irdist::cli
