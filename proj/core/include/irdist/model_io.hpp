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

#ifndef IRDIST_MODEL_IO_HPP_
#define IRDIST_MODEL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irdist/arch.hpp"
#include "irdist/data.hpp"
#include "irdist/metrics.hpp"
#include "irdist/nn.hpp"
#include "irdist/quant.hpp"

namespace irdist {

// Quantized model container, little-endian; layout in docs/model_format.md.
inline constexpr char kTirmMagic[4] = {'T', 'I', 'R', 'M'};
inline constexpr std::uint16_t kTirmVersion = 1;

std::vector<unsigned char> encode_tirm(const QuantizedModel& model);
// Throws FormatError on bad magic, version, truncation, checksum or an
// arch/record mismatch.
QuantizedModel decode_tirm(std::span<const unsigned char> bytes);
void write_tirm(const std::filesystem::path& path, const QuantizedModel& model);
QuantizedModel read_tirm(const std::filesystem::path& path);

// Structured-text sidecar written next to a .tirm file as <file>.json.
struct ModelMetadata {
  std::string arch;
  std::string dataset_hash;
  NormStats norm;
  std::map<std::string, double> metrics;
  std::vector<std::string> flags;
  std::string float_model;  // path of the float parameters this came from
};

std::filesystem::path sidecar_path(const std::filesystem::path& tirm);
void write_metadata(const std::filesystem::path& path, const ModelMetadata& meta);
ModelMetadata read_metadata(const std::filesystem::path& path);

// Float model file (JSON): arch, normalization, parameters.
struct FloatModel {
  ArchConfig arch;
  ModelParams<float> params;
  NormStats norm;
  std::string dataset_hash;
  std::uint64_t seed = 0;
};

void write_float_model(const std::filesystem::path& path, const FloatModel& model);
FloatModel read_float_model(const std::filesystem::path& path);

std::string train_report_json(const TrainReport& report);
std::string metrics_json(const MetricBundle& m);
std::map<std::string, double> metrics_map(const MetricBundle& m, const std::string& prefix = "");

// C source exposing the container as `const unsigned char <symbol>[]` for
// firmware builds that embed the model in flash.
std::string export_c_array(std::span<const unsigned char> bytes, const std::string& symbol);

}  // namespace irdist

#endif  // IRDIST_MODEL_IO_HPP_
