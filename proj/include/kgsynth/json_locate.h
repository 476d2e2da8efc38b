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

#ifndef KGSYNTH_JSON_LOCATE_H_
#define KGSYNTH_JSON_LOCATE_H_

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"

namespace kgsynth {

// A parsed JSON document that remembers where each value ended in the source
// text, keyed by JSON pointer ("/blocks/3/kind"). Offsets point just past the
// value's first token, which is close enough to locate a bad field in a file.
struct LocatedJson {
  nlohmann::json value;
  std::map<std::string, std::size_t> offsets;

  // Offset of `pointer`, or of its nearest recorded ancestor.
  std::size_t offset_of(std::string pointer) const;
};

// Throws FormatError carrying the byte offset of a syntax error.
LocatedJson parse_located(std::string_view text);

}  // namespace kgsynth

#endif  // KGSYNTH_JSON_LOCATE_H_
