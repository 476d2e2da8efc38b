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

#ifndef KGSYNTH_SYNTHESIS_H_
#define KGSYNTH_SYNTHESIS_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "kgsynth/gateway.h"
#include "kgsynth/graph.h"
#include "kgsynth/prompts.h"
#include "kgsynth/sampling.h"
#include "kgsynth/schema.h"
#include "kgsynth/tasks.h"
#include "kgsynth/trace_format.h"

namespace kgsynth {

enum class DifficultyLevel { kSimple, kMedium, kHard };

std::string_view difficulty_name(DifficultyLevel d);
std::optional<DifficultyLevel> parse_difficulty(std::string_view s);

struct QualityScores {
  std::optional<bool> support;
  std::optional<DifficultyLevel> difficulty;
  std::optional<int> complexity;
  bool operator==(const QualityScores&) const = default;
};

struct QARecord {
  std::string id;
  std::string question;
  std::string answer;
  std::string reasoning_path;
  std::string task_name;
  std::string domain;
  std::size_t hop_num = 0;
  // Unfuzzified rendering of the trace context; judges see this.
  std::string trace_ref;
  std::string template_name;
  QualityScores scores;
  std::size_t token_len = 0;
  // Hash of the serialized trace; orders records canonically.
  std::string trace_hash;

  bool operator==(const QARecord&) const = default;
};

nlohmann::ordered_json record_to_json(const QARecord& r);
// Throws FormatError naming the field.
QARecord record_from_json(const nlohmann::json& j);

// Throws UnknownTemplate for anything other than open_qa, mcq or true_false.
std::string render_prompt(const std::string& graph_context, std::string_view template_name,
                          const PromptLibrary& prompts = PromptLibrary::builtin());

// Canonical answer for the template's domain ("A".."D", "True"/"False", or
// the trimmed text for open questions); nullopt when outside the domain.
std::optional<std::string> canonical_answer(std::string_view template_name,
                                            const nlohmann::json& answer);

struct ParsedReply {
  std::string question;
  std::string answer;
  std::string reasoning_path;
};

// Pulls the outermost object out of `text` and checks fields and answer
// domain. Returns nullopt with `why` set on failure.
std::optional<ParsedReply> parse_qa_reply(std::string_view text, std::string_view template_name,
                                          std::string* why = nullptr);

// The context actually sent to the model: fuzzified and/or pronoun-substituted
// per the task.
std::string prompt_context(const TraceContext& context, const TaskConfig& task,
                           const Schema& schema);

std::string trace_hash(const Trace& trace);

struct SynthesisOptions {
  std::string domain = "general";
  const PromptLibrary* prompts = nullptr;
};

// format_trace -> fuzzify -> pronouns -> render -> chat -> parse, with one
// repair turn. Throws GenerationParseError, DanglingTrace, UnknownTemplate or
// gateway errors.
QARecord generate_qa(const Trace& trace, const KnowledgeGraph& graph, const TaskConfig& task,
                     const Schema& schema, const Gateway& gateway,
                     const SynthesisOptions& options = {});

struct SynthesisCounters {
  std::size_t generated = 0;
  std::size_t parse_failures = 0;
};

// Runs generate_qa over all traces concurrently. Parse failures are skipped
// and counted; other errors propagate. Output is sorted by (task_name,
// trace_hash, id). `tasks` is looked up by trace.task_name.
std::vector<QARecord> generate_all(const std::vector<Trace>& traces, const KnowledgeGraph& graph,
                                   const std::map<std::string, TaskConfig>& tasks,
                                   const Schema& schema, const Gateway& gateway,
                                   const SynthesisOptions& options, SynthesisCounters& counters);

void sort_canonical(std::vector<QARecord>& records);

}  // namespace kgsynth

#endif  // KGSYNTH_SYNTHESIS_H_
