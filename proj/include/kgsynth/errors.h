// Copyright 2026 The kgsynth Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KGSYNTH_ERRORS_H_
#define KGSYNTH_ERRORS_H_

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>

namespace kgsynth {

// Base class for every error raised by the library. `code()` is a stable
// machine-readable name used in reports and tests.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

#define KGSYNTH_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

// Graph model.
KGSYNTH_DEFINE_ERROR(DuplicateId);
KGSYNTH_DEFINE_ERROR(InvalidNode);
KGSYNTH_DEFINE_ERROR(InvalidEdgeKind);
KGSYNTH_DEFINE_ERROR(MissingAssertion);
KGSYNTH_DEFINE_ERROR(UnknownNode);

// Ingestion.
KGSYNTH_DEFINE_ERROR(MissingAsset);

// Gateway.
KGSYNTH_DEFINE_ERROR(ConfigError);
KGSYNTH_DEFINE_ERROR(AssetUnreadable);

// Builder.
KGSYNTH_DEFINE_ERROR(SchemaUnknown);
KGSYNTH_DEFINE_ERROR(ExtractionParseError);

// Sampling.
KGSYNTH_DEFINE_ERROR(EmptyGraph);
KGSYNTH_DEFINE_ERROR(NoBackboneFound);
KGSYNTH_DEFINE_ERROR(NoValidTrace);
KGSYNTH_DEFINE_ERROR(DanglingTrace);

// QA synthesis.
KGSYNTH_DEFINE_ERROR(UnknownTemplate);
KGSYNTH_DEFINE_ERROR(GenerationParseError);

// Quality.
KGSYNTH_DEFINE_ERROR(JudgeUnavailable);
KGSYNTH_DEFINE_ERROR(ComplexityParseError);
KGSYNTH_DEFINE_ERROR(MissingScore);

// Analysis and storage.
KGSYNTH_DEFINE_ERROR(UnknownFormat);
KGSYNTH_DEFINE_ERROR(VersionMismatch);
KGSYNTH_DEFINE_ERROR(IoError);

#undef KGSYNTH_DEFINE_ERROR

// Malformed input file. Exactly one of `offset` (byte position, for record
// documents) or `line` (1-based, for line-oriented files) is meaningful.
class FormatError : public Error {
 public:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  FormatError(const std::string& message, std::string field,
              std::size_t offset = kNone, std::size_t line = kNone)
      : Error("FormatError", Describe(message, field, offset, line)),
        field_(std::move(field)),
        offset_(offset),
        line_(line) {}

  const std::string& field() const { return field_; }
  std::size_t offset() const { return offset_; }
  std::size_t line() const { return line_; }

 private:
  static std::string Describe(const std::string& message,
                              const std::string& field, std::size_t offset,
                              std::size_t line) {
    std::string out = message;
    if (!field.empty()) out += " [field " + field + "]";
    if (offset != kNone) out += " [byte " + std::to_string(offset) + "]";
    if (line != kNone) out += " [line " + std::to_string(line) + "]";
    return out;
  }

  std::string field_;
  std::size_t offset_;
  std::size_t line_;
};

// A required column was present but empty.
class EmptyField : public Error {
 public:
  EmptyField(std::string column, std::size_t line)
      : Error("EmptyField", "column '" + column + "' is empty at line " +
                                std::to_string(line)),
        column_(std::move(column)),
        line_(line) {}

  const std::string& column() const { return column_; }
  std::size_t line() const { return line_; }

 private:
  std::string column_;
  std::size_t line_;
};

// Every endpoint of a pool failed; carries the last error seen per endpoint.
class AllEndpointsFailed : public Error {
 public:
  explicit AllEndpointsFailed(std::map<std::string, std::string> last_errors)
      : Error("AllEndpointsFailed", Summarize(last_errors)),
        last_errors_(std::move(last_errors)) {}

  const std::map<std::string, std::string>& last_errors() const {
    return last_errors_;
  }

 private:
  static std::string Summarize(const std::map<std::string, std::string>& e) {
    std::string out;
    for (const auto& [endpoint, message] : e) {
      if (!out.empty()) out += "; ";
      out += endpoint + " -> " + message;
    }
    return out.empty() ? "no endpoint attempted" : out;
  }

  std::map<std::string, std::string> last_errors_;
};

}  // namespace kgsynth

#endif  // KGSYNTH_ERRORS_H_
