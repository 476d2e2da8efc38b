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

#ifndef KGSYNTH_QUALITY_H_
#define KGSYNTH_QUALITY_H_

#include <array>
#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "kgsynth/gateway.h"
#include "kgsynth/prompts.h"
#include "kgsynth/synthesis.h"

namespace kgsynth {

inline constexpr double kDefaultDedupThreshold = 0.92;

// Greedy scan in the given order: a record is kept iff its question's cosine
// to every kept question is below `threshold`. Throws ConfigError for a
// threshold outside (0, 1].
std::vector<QARecord> deduplicate(const std::vector<QARecord>& records,
                                  const EndpointPool& embedder, double threshold);
// Same rule over precomputed vectors; returns kept indices.
std::vector<std::size_t> dedup_indices(const std::vector<Embedding>& vectors, double threshold);

// 0/1 vote from a judge reply; anything else is 0.
int parse_vote(std::string_view reply);
bool majority_supported(const std::array<int, 3>& votes);

// Exactly three judges. Transport failures count as 0. Throws
// JudgeUnavailable otherwise.
bool score_support(const QARecord& record,
                   const std::vector<std::shared_ptr<EndpointPool>>& judges,
                   const PromptLibrary& prompts = PromptLibrary::builtin(),
                   std::atomic<std::size_t>* transport_failures = nullptr);

// Normalized form used for grading: trim, ASCII case-fold, strip terminal
// punctuation.
std::string normalize_answer(std::string_view s);
// Compares a model's reply with the reference; for mcq/true_false only the
// option letter / label is compared.
bool grade_answer(std::string_view template_name, std::string_view model_reply,
                  std::string_view reference);
// The answer field of a Difficulty reply, falling back to the whole reply.
std::string difficulty_reply_answer(std::string_view reply);

DifficultyLevel classify_difficulty(bool weak_correct, bool strong_correct);

using Grader = std::function<bool(const QARecord&, std::string_view model_reply)>;
Grader default_grader();

DifficultyLevel score_difficulty(const QARecord& record, const EndpointPool& weak,
                                 const EndpointPool& strong, const Grader& grader = default_grader(),
                                 const PromptLibrary& prompts = PromptLibrary::builtin());

// Integer 1..5 from a reply, or nullopt.
std::optional<int> parse_complexity(std::string_view reply);
// One repair turn; throws ComplexityParseError.
int score_complexity(const QARecord& record, const EndpointPool& judge,
                     const PromptLibrary& prompts = PromptLibrary::builtin());

struct FilterPolicy {
  double dedup_threshold = kDefaultDedupThreshold;
  bool require_support = false;
  // Empty keeps every level (the clause is disabled).
  std::set<DifficultyLevel> difficulty_keep;
  // 0 disables the clause.
  int complexity_min = 0;

  // Throws ConfigError.
  void validate() const;
};

nlohmann::ordered_json policy_to_json(const FilterPolicy& p);
FilterPolicy policy_from_json(const nlohmann::json& j);

struct FilterResult {
  std::vector<QARecord> kept;
  // Drop reason -> count. A record is attributed to its first failing clause
  // in the order support, difficulty, complexity.
  std::map<std::string, std::size_t> dropped;
};

// Throws MissingScore when an enabled clause needs a score a record lacks.
FilterResult filter_dataset(const std::vector<QARecord>& records, const FilterPolicy& policy);

struct ScoringCounters {
  std::size_t judge_failures = 0;
};

// Fills in the scores each enabled gateway pool can produce, concurrently.
void score_all(std::vector<QARecord>& records, const Gateway& gateway,
               const PromptLibrary& prompts, ScoringCounters& counters);

}  // namespace kgsynth

#endif  // KGSYNTH_QUALITY_H_
