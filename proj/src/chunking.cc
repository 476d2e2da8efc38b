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

#include <algorithm>

#include "kgsynth/ingest.h"
#include "kgsynth/text.h"

namespace kgsynth {

namespace {

std::vector<std::string_view> split_segments(std::string_view text,
                                             const std::vector<std::string>& separators) {
  std::vector<std::string_view> segments;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t match = 0;
    for (const std::string& sep : separators) {
      if (!sep.empty() && sep.size() > match && text.compare(i, sep.size(), sep) == 0) {
        match = sep.size();
      }
    }
    if (match > 0) {
      i += match;
      segments.push_back(text.substr(start, i - start));
      start = i;
    } else {
      ++i;
    }
  }
  if (start < text.size()) segments.push_back(text.substr(start));
  return segments;
}

}  // namespace

std::vector<std::string> chunk_text(std::string_view text,
                                    const std::vector<std::string>& separators,
                                    std::size_t max_chars) {
  std::vector<std::string> chunks;
  std::string current;
  std::size_t current_len = 0;
  for (std::string_view seg : split_segments(text, separators)) {
    std::size_t seg_len = utf8_length(seg);
    if (!current.empty() && current_len + seg_len > max_chars) {
      chunks.push_back(std::move(current));
      current.clear();
      current_len = 0;
    }
    current.append(seg);
    current_len += seg_len;
  }
  if (!current.empty()) chunks.push_back(std::move(current));
  return chunks;
}

bool ends_mid_sentence(std::string_view chunk) {
  static const std::string_view kTerminal[] = {".", "!", "?", "。", "！", "？"};
  std::string_view last = last_non_space_code_point(chunk);
  if (last.empty()) return true;
  return std::find(std::begin(kTerminal), std::end(kTerminal), last) == std::end(kTerminal);
}

std::vector<std::vector<std::size_t>> merge_cross_boundary_groups(
    const std::vector<std::string>& chunks, const ContinuationPredicate& continues) {
  std::vector<std::vector<std::size_t>> groups;
  std::string pending;
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    pending += chunks[i];
    members.push_back(i);
    if (i + 1 == chunks.size() || !continues(pending)) {
      groups.push_back(std::move(members));
      members.clear();
      pending.clear();
    }
  }
  return groups;
}

std::vector<std::string> merge_cross_boundary_chunks(const std::vector<std::string>& chunks,
                                                     const ContinuationPredicate& continues) {
  std::vector<std::string> out;
  for (const auto& group : merge_cross_boundary_groups(chunks, continues)) {
    std::string merged;
    for (std::size_t i : group) merged += chunks[i];
    out.push_back(std::move(merged));
  }
  return out;
}

}  // namespace kgsynth
