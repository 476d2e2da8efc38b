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

#ifndef KGSYNTH_PROMPTS_H_
#define KGSYNTH_PROMPTS_H_

#include <map>
#include <string>
#include <string_view>

namespace kgsynth {

using PromptVars = std::map<std::string, std::string>;

// Replaces each "{name}" whose name is a key of `vars`; other braces are left
// alone, so templates can show literal JSON. One pass: substituted values are
// never re-scanned.
std::string fill_template(std::string_view tmpl, const PromptVars& vars);

// Named prompt templates. Starts from the set compiled in from prompts/*.txt;
// a directory of *.txt files can override entries by file stem.
class PromptLibrary {
 public:
  static const PromptLibrary& builtin();

  PromptLibrary();
  // Throws IoError when the directory is missing.
  void load_overrides(const std::string& directory);

  bool has(std::string_view name) const;
  // Throws UnknownTemplate.
  const std::string& get(std::string_view name) const;
  std::string render(std::string_view name, const PromptVars& vars) const {
    return fill_template(get(name), vars);
  }

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace kgsynth

#endif  // KGSYNTH_PROMPTS_H_
