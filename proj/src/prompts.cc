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

#include "kgsynth/prompts.h"

#include <filesystem>

#include "kgsynth/errors.h"
#include "kgsynth/text.h"

namespace kgsynth {

namespace detail {
const std::map<std::string, std::string>& builtin_prompts();
}

std::string fill_template(std::string_view tmpl, const PromptVars& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

PromptLibrary::PromptLibrary() {
  for (const auto& [name, text] : detail::builtin_prompts()) templates_.emplace(name, text);
}

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary lib;
  return lib;
}

void PromptLibrary::load_overrides(const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) throw IoError("no prompt directory '" + directory + "'");
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      templates_[entry.path().stem().string()] = read_file(entry.path().string());
    }
  }
}

bool PromptLibrary::has(std::string_view name) const { return templates_.count(name) > 0; }

const std::string& PromptLibrary::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw UnknownTemplate("no prompt template '" + std::string(name) + "'");
  return it->second;
}

}  // namespace kgsynth
