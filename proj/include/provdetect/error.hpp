/*
 * Copyright 2026 The provdetect Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PROVDETECT_ERROR_HPP_
#define PROVDETECT_ERROR_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace provdetect {

enum class Errc {
  kInvalidRecord,
  kInvalidConfig,
  kCountExceedsDataset,
  kParseError,
  kNoAnomalies,
  kZeroVector,
  kBackendUnavailable,
  kDimensionMismatch,
  kCacheCorrupt,
  kEmptyTrainingSet,
  kDegenerateData,
  kConvergenceFailure,
  kSingleClass,
  kPerplexityTooLarge,
  kIoError,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidRecord: return "InvalidRecord";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kCountExceedsDataset: return "CountExceedsDataset";
    case Errc::kParseError: return "ParseError";
    case Errc::kNoAnomalies: return "NoAnomalies";
    case Errc::kZeroVector: return "ZeroVector";
    case Errc::kBackendUnavailable: return "BackendUnavailable";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kCacheCorrupt: return "CacheCorrupt";
    case Errc::kEmptyTrainingSet: return "EmptyTrainingSet";
    case Errc::kDegenerateData: return "DegenerateData";
    case Errc::kConvergenceFailure: return "ConvergenceFailure";
    case Errc::kSingleClass: return "SingleClass";
    case Errc::kPerplexityTooLarge: return "PerplexityTooLarge";
    case Errc::kIoError: return "IoError";
  }
  return "Unknown";
}

// Every module error surfaces as this exception. `field` names the offending
// record field (InvalidRecord) and `line` the 1-based input line (ParseError).
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail, std::string field = {},
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(Format(code, detail, field, line)),
        code_(code),
        detail_(std::move(detail)),
        field_(std::move(field)),
        line_(line) {}

  Errc code() const { return code_; }
  const std::string& detail() const { return detail_; }
  const std::string& field() const { return field_; }
  std::optional<std::size_t> line() const { return line_; }

 private:
  static std::string Format(Errc code, const std::string& detail,
                            const std::string& field,
                            std::optional<std::size_t> line) {
    std::string out(to_string(code));
    if (line) out += " line=" + std::to_string(*line);
    if (!field.empty()) out += " field=" + field;
    if (!detail.empty()) out += ": " + detail;
    return out;
  }

  Errc code_;
  std::string detail_;
  std::string field_;
  std::optional<std::size_t> line_;
};

}  // namespace provdetect

#endif  // PROVDETECT_ERROR_HPP_
