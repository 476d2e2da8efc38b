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

#ifndef KGSYNTH_TEXT_H_
#define KGSYNTH_TEXT_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgsynth {

// Number of Unicode scalar values in a UTF-8 string (continuation bytes are
// not counted).
std::size_t utf8_length(std::string_view s);

// Last code point that is not ASCII whitespace, as a UTF-8 substring.
std::string_view last_non_space_code_point(std::string_view s);

std::string_view trim(std::string_view s);
std::string ascii_lower(std::string_view s);
std::string replace_all(std::string_view s, std::string_view from,
                        std::string_view to);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool contains(std::string_view haystack, std::string_view needle);

// The first '{' through its matching '}' (string literals respected), or
// nullopt when there is no balanced object. Lets callers pull a structured
// reply out of surrounding prose.
std::optional<std::string> extract_balanced_object(std::string_view text);

// Whole-file helpers; throw IoError.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace kgsynth

#endif  // KGSYNTH_TEXT_H_
