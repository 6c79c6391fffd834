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

#include "irdist/model_io.hpp"

#include <cstdio>
#include <limits>
#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "irdist/error.hpp"
#include "irdist/io.hpp"
#include "irdist/rng.hpp"

namespace irdist {

using nlohmann::json;

namespace {

std::uint8_t activation_code(Activation a) {
  switch (a) {
    case Activation::kNone: return 0;
    case Activation::kRelu: return 1;
    case Activation::kSigmoid: return 2;
  }
  return 0;
}

Activation activation_from(std::uint8_t c) {
  switch (c) {
    case 0: return Activation::kNone;
    case 1: return Activation::kRelu;
    case 2: return Activation::kSigmoid;
    default: throw FormatError("tirm: bad activation code " + std::to_string(c));
  }
}

void put_qparams(detail::ByteWriter& w, const QuantParams& q) {
  w.f64(q.scale);
  w.i32(q.zero_point);
}

QuantParams get_qparams(detail::ByteReader& r) {
  QuantParams q;
  q.scale = r.f64();
  q.zero_point = r.i32();
  if (!(q.scale > 0.0) || q.zero_point < kQMin || q.zero_point > kQMax) {
    throw FormatError("tirm: invalid quantization parameters");
  }
  return q;
}

}  // namespace

std::vector<unsigned char> encode_tirm(const QuantizedModel& model) {
  detail::ByteWriter w;
  w.raw({reinterpret_cast<const unsigned char*>(kTirmMagic), 4});
  w.u16(kTirmVersion);
  const std::string arch = model.arch.name();
  w.u16(static_cast<std::uint16_t>(arch.size()));
  w.str(arch);
  put_qparams(w, model.input);
  put_qparams(w, model.output);
  w.u16(static_cast<std::uint16_t>(model.layers.size()));
  for (const auto& l : model.layers) {
    w.u8(l.kind == LayerKind::kConv ? 0 : 1);
    w.u8(activation_code(l.activation));
    w.u32(static_cast<std::uint32_t>(l.weights.size()));
    for (std::int8_t v : l.weights) w.u8(static_cast<std::uint8_t>(v));
    w.u32(static_cast<std::uint32_t>(l.bias.size()));
    for (std::int32_t v : l.bias) w.i32(v);
    w.f64(l.weight_scale);
    put_qparams(w, l.input);
    put_qparams(w, l.output);
    w.i32(l.requant.multiplier);
    w.i32(l.requant.shift);
  }
  const std::uint64_t checksum = fnv1a64(w.bytes());
  w.u64(checksum);
  return std::move(w.bytes());
}

QuantizedModel decode_tirm(std::span<const unsigned char> bytes) {
  if (bytes.size() < 8) throw FormatError("tirm: file too short");
  const auto body = bytes.first(bytes.size() - 8);
  detail::ByteReader tail(bytes.last(8));
  if (tail.u64() != fnv1a64(body)) throw FormatError("tirm: checksum mismatch");

  detail::ByteReader r(body);
  if (r.str(4) != std::string(kTirmMagic, 4)) throw FormatError("tirm: bad magic");
  const auto version = r.u16();
  if (version != kTirmVersion) throw FormatError("tirm: unsupported version " + std::to_string(version));
  QuantizedModel m;
  try {
    m.arch = ArchConfig::parse(r.str(r.u16()));
  } catch (const InvalidArgumentError& e) {
    throw FormatError(std::string("tirm: ") + e.what());
  }
  m.input = get_qparams(r);
  m.output = get_qparams(r);
  const auto plan = shape_plan(m.arch);
  const std::size_t n_layers = r.u16();
  std::size_t k = 0;
  for (const auto& layer : plan) {
    if (!layer.has_params()) continue;
    if (k++ >= n_layers) throw FormatError("tirm: fewer layer records than " + m.arch.name() + " needs");
    QuantizedLayer l;
    const auto kind = r.u8();
    l.kind = kind == 0 ? LayerKind::kConv : LayerKind::kDense;
    if (kind > 1 || l.kind != layer.kind) throw FormatError("tirm: layer kind mismatch");
    l.activation = activation_from(r.u8());
    l.input_shape = layer.input;
    l.output_shape = layer.output;
    const std::uint32_t nw = r.u32();
    if (nw != layer.weight_count()) throw FormatError("tirm: weight count mismatch");
    l.weights.resize(nw);
    for (auto& v : l.weights) {
      v = static_cast<std::int8_t>(r.u8());
      if (v < -kWeightQMax) throw FormatError("tirm: weight -128 outside symmetric range");
    }
    const std::uint32_t nb = r.u32();
    if (nb != layer.bias_count()) throw FormatError("tirm: bias count mismatch");
    l.bias.resize(nb);
    for (auto& v : l.bias) v = r.i32();
    l.weight_scale = r.f64();
    l.input = get_qparams(r);
    l.output = get_qparams(r);
    l.requant.multiplier = r.i32();
    l.requant.shift = r.i32();
    if (l.requant.shift < 1 || l.requant.shift > 62 || l.requant.multiplier < 0) {
      throw FormatError("tirm: invalid requantizer");
    }
    l.requant.saturated =
        l.requant.multiplier == std::numeric_limits<std::int32_t>::max() && l.requant.shift == 1;
    m.layers.push_back(std::move(l));
  }
  if (k != n_layers) throw FormatError("tirm: more layer records than " + m.arch.name() + " needs");
  if (r.remaining() != 0) throw FormatError("tirm: trailing bytes");
  return m;
}

void write_tirm(const std::filesystem::path& path, const QuantizedModel& model) {
  write_file_bytes(path, encode_tirm(model));
}

QuantizedModel read_tirm(const std::filesystem::path& path) {
  return decode_tirm(read_file_bytes(path));
}

std::filesystem::path sidecar_path(const std::filesystem::path& tirm) {
  auto p = tirm;
  p += ".json";
  return p;
}

namespace {

json norm_json(const NormStats& n) {
  return {{"mean", n.mean}, {"stddev", n.stddev}, {"degenerate", n.degenerate}};
}

NormStats norm_from(const json& j) {
  NormStats n;
  n.mean = j.at("mean").get<double>();
  n.stddev = j.at("stddev").get<double>();
  n.degenerate = j.value("degenerate", false);
  return n;
}

json parse_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace

void write_metadata(const std::filesystem::path& path, const ModelMetadata& meta) {
  json j;
  j["format"] = "irdist-model-metadata";
  j["version"] = 1;
  j["arch"] = meta.arch;
  j["dataset_hash"] = meta.dataset_hash;
  j["normalization"] = norm_json(meta.norm);
  j["metrics"] = meta.metrics;
  j["flags"] = meta.flags;
  j["float_model"] = meta.float_model;
  write_text_file(path, j.dump(2) + "\n");
}

ModelMetadata read_metadata(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  try {
    ModelMetadata m;
    m.arch = j.at("arch").get<std::string>();
    m.dataset_hash = j.value("dataset_hash", "");
    m.norm = norm_from(j.at("normalization"));
    m.metrics = j.value("metrics", std::map<std::string, double>{});
    m.flags = j.value("flags", std::vector<std::string>{});
    m.float_model = j.value("float_model", "");
    return m;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_float_model(const std::filesystem::path& path, const FloatModel& model) {
  json j;
  j["format"] = "irdist-float-model";
  j["version"] = 1;
  j["arch"] = model.arch.name();
  j["normalization"] = norm_json(model.norm);
  j["dataset_hash"] = model.dataset_hash;
  j["seed"] = model.seed;
  json layers = json::array();
  for (const auto& l : model.params.layers) {
    layers.push_back({{"weights_shape", l.weights.shape()},
                      {"weights", std::vector<float>(l.weights.data().begin(), l.weights.data().end())},
                      {"bias", std::vector<float>(l.bias.data().begin(), l.bias.data().end())}});
  }
  j["layers"] = std::move(layers);
  write_text_file(path, j.dump() + "\n");
}

FloatModel read_float_model(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  try {
    if (j.value("format", "") != "irdist-float-model") {
      throw FormatError(path.string() + ": not an irdist float model");
    }
    FloatModel m;
    m.arch = ArchConfig::parse(j.at("arch").get<std::string>());
    m.norm = norm_from(j.at("normalization"));
    m.dataset_hash = j.value("dataset_hash", "");
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& l : j.at("layers")) {
      auto shape = l.at("weights_shape").get<Shape>();
      auto w = l.at("weights").get<std::vector<float>>();
      auto b = l.at("bias").get<std::vector<float>>();
      const std::size_t nb = b.size();
      m.params.layers.push_back({Tensor::from_external(std::move(shape), std::move(w)),
                                 Tensor::from_external({nb}, std::move(b))});
    }
    check_params(m.arch, m.params);
    return m;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const InvalidArgumentError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

namespace {

json metrics_to_json(const MetricBundle& m) {
  json j;
  j["tp"] = m.confusion.tp;
  j["fp"] = m.confusion.fp;
  j["tn"] = m.confusion.tn;
  j["fn"] = m.confusion.fn;
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  j["balanced_accuracy"] = opt(m.balanced_accuracy);
  j["accuracy"] = opt(m.accuracy);
  j["f1"] = opt(m.f1);
  j["roc_auc"] = opt(m.roc_auc);
  return j;
}

}  // namespace

std::string metrics_json(const MetricBundle& m) { return metrics_to_json(m).dump(2); }

std::map<std::string, double> metrics_map(const MetricBundle& m, const std::string& prefix) {
  std::map<std::string, double> out;
  if (m.balanced_accuracy) out[prefix + "balanced_accuracy"] = *m.balanced_accuracy;
  if (m.accuracy) out[prefix + "accuracy"] = *m.accuracy;
  if (m.f1) out[prefix + "f1"] = *m.f1;
  if (m.roc_auc) out[prefix + "roc_auc"] = *m.roc_auc;
  return out;
}

std::string train_report_json(const TrainReport& report) {
  json j;
  j["epochs_run"] = report.epochs_run;
  j["best_epoch"] = report.best_epoch;
  j["best_val_loss"] = report.best_val_loss;
  j["stopped_early"] = report.stopped_early;
  j["final_lr"] = report.final_lr;
  j["lr_history"] = report.lr_history;
  j["train_loss"] = report.train_loss;
  j["val_loss"] = report.val_loss;
  j["val_metrics"] = metrics_to_json(report.val_metrics);
  return j.dump(2) + "\n";
}

std::string export_c_array(std::span<const unsigned char> bytes, const std::string& symbol) {
  std::string out;
  out += "// Generated by irdist export. Quantized model container (TIRM v" +
         std::to_string(kTirmVersion) + ").\n";
  out += "#include <stddef.h>\n\n";
  out += "const unsigned char " + symbol + "[] = {\n";
  char buf[8];
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i % 12 == 0) out += "  ";
    std::snprintf(buf, sizeof buf, "0x%02x,", bytes[i]);
    out += buf;
    out += (i % 12 == 11 || i + 1 == bytes.size()) ? "\n" : " ";
  }
  out += "};\n";
  out += "const size_t " + symbol + "_len = " + std::to_string(bytes.size()) + ";\n";
  return out;
}

}  // namespace irdist
