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

#include "kgsynth/synthesis.h"

#include <algorithm>
#include <cctype>

#include "kgsynth/errors.h"
#include "kgsynth/hash.h"
#include "kgsynth/parallel.h"
#include "kgsynth/text.h"

namespace kgsynth {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string strip_terminal_punct(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == ')' || s.back() == ':')) s.pop_back();
  return std::string(trim(s));
}

std::string answer_rule(std::string_view template_name) {
  if (template_name == "mcq") return " The \"answer\" field must be exactly one of A, B, C or D.";
  if (template_name == "true_false") return " The \"answer\" field must be exactly True or False.";
  return "";
}

const json* field(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

std::string req_string(const json& j, const char* key) {
  const json* v = field(j, key);
  if (!v || !v->is_string()) throw FormatError("expected a string", key);
  return v->get<std::string>();
}

}  // namespace

std::string_view difficulty_name(DifficultyLevel d) {
  switch (d) {
    case DifficultyLevel::kSimple: return "simple";
    case DifficultyLevel::kMedium: return "medium";
    case DifficultyLevel::kHard: return "hard";
  }
  return "simple";
}

std::optional<DifficultyLevel> parse_difficulty(std::string_view s) {
  if (s == "simple") return DifficultyLevel::kSimple;
  if (s == "medium") return DifficultyLevel::kMedium;
  if (s == "hard") return DifficultyLevel::kHard;
  return std::nullopt;
}

ordered_json record_to_json(const QARecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["question"] = r.question;
  j["answer"] = r.answer;
  j["reasoning_path"] = r.reasoning_path;
  j["task_name"] = r.task_name;
  j["domain"] = r.domain;
  j["hop_num"] = r.hop_num;
  j["trace_ref"] = r.trace_ref;
  j["trace_hash"] = r.trace_hash;
  j["template"] = r.template_name;
  ordered_json s;
  s["support"] = r.scores.support ? ordered_json(*r.scores.support) : ordered_json(nullptr);
  s["difficulty"] = r.scores.difficulty
                        ? ordered_json(std::string(difficulty_name(*r.scores.difficulty)))
                        : ordered_json(nullptr);
  s["complexity"] = r.scores.complexity ? ordered_json(*r.scores.complexity) : ordered_json(nullptr);
  j["scores"] = std::move(s);
  j["token_len"] = r.token_len;
  return j;
}

QARecord record_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("record is not an object", "");
  QARecord r;
  r.id = req_string(j, "id");
  r.question = req_string(j, "question");
  r.answer = req_string(j, "answer");
  r.reasoning_path = req_string(j, "reasoning_path");
  r.task_name = req_string(j, "task_name");
  r.domain = req_string(j, "domain");
  r.trace_ref = req_string(j, "trace_ref");
  r.template_name = req_string(j, "template");
  if (const json* h = field(j, "trace_hash"); h && h->is_string()) r.trace_hash = h->get<std::string>();
  const json* hop = field(j, "hop_num");
  if (!hop || !hop->is_number_unsigned()) throw FormatError("expected a non-negative integer", "hop_num");
  r.hop_num = hop->get<std::size_t>();
  if (const json* t = field(j, "token_len")) {
    if (!t->is_number_unsigned()) throw FormatError("expected a non-negative integer", "token_len");
    r.token_len = t->get<std::size_t>();
  }
  if (const json* s = field(j, "scores"); s && !s->is_null()) {
    if (!s->is_object()) throw FormatError("expected an object", "scores");
    if (const json* v = field(*s, "support"); v && !v->is_null()) {
      if (!v->is_boolean()) throw FormatError("expected a boolean", "scores.support");
      r.scores.support = v->get<bool>();
    }
    if (const json* v = field(*s, "difficulty"); v && !v->is_null()) {
      auto d = v->is_string() ? parse_difficulty(v->get<std::string>()) : std::nullopt;
      if (!d) throw FormatError("expected simple, medium or hard", "scores.difficulty");
      r.scores.difficulty = d;
    }
    if (const json* v = field(*s, "complexity"); v && !v->is_null()) {
      if (!v->is_number_integer()) throw FormatError("expected an integer", "scores.complexity");
      r.scores.complexity = v->get<int>();
    }
  }
  return r;
}

std::string render_prompt(const std::string& graph_context, std::string_view template_name,
                          const PromptLibrary& prompts) {
  if (!is_known_template(template_name)) {
    throw UnknownTemplate("'" + std::string(template_name) + "' is not a question template");
  }
  return prompts.render(template_name, {{"graph_context", graph_context}});
}

std::optional<std::string> canonical_answer(std::string_view template_name, const json& answer) {
  if (template_name == "true_false" && answer.is_boolean()) {
    return answer.get<bool>() ? "True" : "False";
  }
  if (!answer.is_string()) {
    if (template_name == "open_qa" && answer.is_number()) return answer.dump();
    return std::nullopt;
  }
  std::string a(trim(answer.get<std::string>()));
  if (template_name == "mcq") {
    a = strip_terminal_punct(a);
    if (a.size() >= 2 && a.front() == '(') a.erase(0, 1);
    if (a.size() != 1) return std::nullopt;
    char c = static_cast<char>(std::toupper(static_cast<unsigned char>(a[0])));
    if (c < 'A' || c > 'D') return std::nullopt;
    return std::string(1, c);
  }
  if (template_name == "true_false") {
    std::string l = ascii_lower(strip_terminal_punct(a));
    if (l == "true") return "True";
    if (l == "false") return "False";
    return std::nullopt;
  }
  if (a.empty()) return std::nullopt;
  return a;
}

std::optional<ParsedReply> parse_qa_reply(std::string_view text, std::string_view template_name,
                                          std::string* why) {
  auto fail = [&](std::string msg) -> std::optional<ParsedReply> {
    if (why) *why = std::move(msg);
    return std::nullopt;
  };
  auto obj = extract_balanced_object(text);
  if (!obj) return fail("no JSON object in reply");
  json j = json::parse(*obj, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return fail("reply object is not valid JSON");
  ParsedReply out;
  for (auto [key, dst] : {std::pair{"question", &out.question},
                          std::pair{"reasoning_path", &out.reasoning_path}}) {
    const json* v = field(j, key);
    if (!v || !v->is_string() || trim(v->get<std::string>()).empty()) {
      return fail(std::string("missing or empty '") + key + "'");
    }
    *dst = std::string(trim(v->get<std::string>()));
  }
  const json* a = field(j, "answer");
  if (!a) return fail("missing 'answer'");
  auto canon = canonical_answer(template_name, *a);
  if (!canon) return fail("answer " + a->dump() + " is outside the template's domain");
  out.answer = *canon;
  return out;
}

std::string prompt_context(const TraceContext& context, const TaskConfig& task,
                           const Schema& schema) {
  TraceContext ctx = context;
  if (task.fuzzify) ctx = fuzzify_entities(ctx, schema).context;
  if (task.pronoun_substitute) ctx = substitute_pronouns(ctx);
  return ctx.render();
}

std::string trace_hash(const Trace& trace) {
  return to_hex(fnv1a64(trace_to_json(trace).dump()));
}

QARecord generate_qa(const Trace& trace, const KnowledgeGraph& graph, const TaskConfig& task,
                     const Schema& schema, const Gateway& gateway,
                     const SynthesisOptions& options) {
  const PromptLibrary& prompts = options.prompts ? *options.prompts : PromptLibrary::builtin();
  TraceContext ctx = format_trace(trace, graph);
  std::string prompt = render_prompt(prompt_context(ctx, task, schema), task.template_name, prompts);
  const EndpointPool& chat = gateway.require_chat();

  std::string reply = chat.chat(user_request(prompt, gateway.generation_temperature, true)).text;
  std::string why;
  auto parsed = parse_qa_reply(reply, task.template_name, &why);
  if (!parsed) {
    std::string repair = prompts.render(
        "format_repair",
        {{"answer_rule", answer_rule(task.template_name)}, {"previous", reply}, {"prompt", prompt}});
    reply = chat.chat(user_request(repair, gateway.generation_temperature, true)).text;
    parsed = parse_qa_reply(reply, task.template_name, &why);
    if (!parsed) throw GenerationParseError(task.task_name + ": " + why);
  }

  QARecord r;
  r.question = parsed->question;
  r.answer = parsed->answer;
  r.reasoning_path = parsed->reasoning_path;
  r.task_name = task.task_name;
  r.domain = options.domain;
  r.hop_num = trace.hop_num;
  r.trace_ref = ctx.render();
  r.template_name = task.template_name;
  r.trace_hash = trace_hash(trace);
  r.id = "qa:" + to_hex(hash_fields({r.task_name, r.trace_hash, r.template_name}));
  return r;
}

void sort_canonical(std::vector<QARecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const QARecord& a, const QARecord& b) {
    return std::tie(a.task_name, a.trace_hash, a.id) < std::tie(b.task_name, b.trace_hash, b.id);
  });
}

std::vector<QARecord> generate_all(const std::vector<Trace>& traces, const KnowledgeGraph& graph,
                                   const std::map<std::string, TaskConfig>& tasks,
                                   const Schema& schema, const Gateway& gateway,
                                   const SynthesisOptions& options, SynthesisCounters& counters) {
  for (const Trace& t : traces) {
    if (!tasks.count(t.task_name)) throw ConfigError("no task named '" + t.task_name + "'");
  }
  auto results = parallel_map(traces.size(), gateway.workers,
                              [&](std::size_t i) -> std::optional<QARecord> {
                                const Trace& t = traces[i];
                                try {
                                  return generate_qa(t, graph, tasks.at(t.task_name), schema,
                                                     gateway, options);
                                } catch (const GenerationParseError&) {
                                  return std::nullopt;
                                }
                              });
  std::vector<QARecord> out;
  for (auto& r : results) {
    if (r) {
      out.push_back(std::move(*r));
    } else {
      ++counters.parse_failures;
    }
  }
  counters.generated += out.size();
  sort_canonical(out);
  return out;
}

}  // namespace kgsynth
