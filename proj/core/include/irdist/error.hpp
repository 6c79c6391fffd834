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

#ifndef IRDIST_ERROR_HPP_
#define IRDIST_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace irdist {

enum class ErrorCategory {
  kInvalidArgument,
  kConfig,
  kParse,
  kIo,
  kFormat,
  kUndefinedMetric,
};

std::string_view to_string(ErrorCategory category);

// Base of every exception the library throws. The category drives the CLI
// exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class InvalidArgumentError : public Error {
 public:
  explicit InvalidArgumentError(const std::string& what)
      : Error(ErrorCategory::kInvalidArgument, what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(ErrorCategory::kConfig, key + ": " + what), key_(std::move(key)), detail_(what) {}
  const std::string& key() const noexcept { return key_; }
  // The message without the key prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string key_;
  std::string detail_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error(ErrorCategory::kParse, "row " + std::to_string(row) + ": " + what),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

// Malformed binary container (bad magic, truncated record, ...).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error(ErrorCategory::kFormat, what) {}
};

// A metric whose denominator is zero. Never reported as a silent 0.
class UndefinedMetricError : public Error {
 public:
  explicit UndefinedMetricError(const std::string& what)
      : Error(ErrorCategory::kUndefinedMetric, what) {}
};

}  // namespace irdist

#endif  // IRDIST_ERROR_HPP_
