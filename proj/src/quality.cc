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

#include "kgsynth/quality.h"

#include <atomic>
#include <cctype>
#include <regex>

#include "kgsynth/errors.h"
#include "kgsynth/parallel.h"
#include "kgsynth/text.h"

namespace kgsynth {

namespace {

using nlohmann::json;

bool is_terminal_punct(char c) {
  return c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':' || c == '"' ||
         c == '\'';
}

}  // namespace

std::vector<std::size_t> dedup_indices(const std::vector<Embedding>& vectors, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("dedup_threshold must lie in (0, 1]");
  }
  std::vector<std::size_t> kept;
  std::vector<Embedding> unit;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    double n = vectors[i].norm();
    Embedding u = n > 0 ? Embedding(vectors[i] / n) : vectors[i];
    bool dup = false;
    for (const Embedding& k : unit) {
      // Byte-identical questions give identical vectors; compare against 1
      // with a little slack so rounding never keeps them both.
      double c = u.dot(k);
      if (c >= threshold || (u.size() == k.size() && u == k && n > 0)) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      kept.push_back(i);
      unit.push_back(std::move(u));
    }
  }
  return kept;
}

std::vector<QARecord> deduplicate(const std::vector<QARecord>& records,
                                  const EndpointPool& embedder, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("dedup_threshold must lie in (0, 1]");
  }
  if (records.empty()) return {};
  std::vector<std::string> questions;
  questions.reserve(records.size());
  for (const auto& r : records) questions.push_back(r.question);
  std::vector<QARecord> out;
  for (std::size_t i : dedup_indices(embedder.embed(questions), threshold)) {
    out.push_back(records[i]);
  }
  return out;
}

int parse_vote(std::string_view reply) {
  std::string_view t = trim(reply);
  if (t == "1") return 1;
  if (t == "0") return 0;
  // Tolerate a bare digit wrapped in prose or quotes, but only when exactly
  // one 0/1 token is present.
  static const std::regex tok(R"((^|[^0-9])([01])([^0-9]|$))");
  std::string s(t);
  auto it = std::sregex_iterator(s.begin(), s.end(), tok);
  int found = -1, count = 0;
  for (; it != std::sregex_iterator(); ++it) {
    found = (*it)[2].str() == "1" ? 1 : 0;
    ++count;
  }
  return count == 1 ? found : 0;
}

bool majority_supported(const std::array<int, 3>& votes) {
  int sum = 0;
  for (int v : votes) sum += v == 1 ? 1 : 0;
  return sum >= 2;
}

bool score_support(const QARecord& record,
                   const std::vector<std::shared_ptr<EndpointPool>>& judges,
                   const PromptLibrary& prompts, std::atomic<std::size_t>* transport_failures) {
  std::size_t configured = 0;
  for (const auto& j : judges) configured += j && j->size() > 0 ? 1 : 0;
  if (judges.size() != 3 || configured != 3) {
    throw JudgeUnavailable("support scoring needs exactly 3 judges, have " +
                           std::to_string(configured));
  }
  std::string prompt = prompts.render("support", {{"question", record.question},
                                                  {"answer", record.answer},
                                                  {"cot", record.reasoning_path},
                                                  {"kgpath", record.trace_ref}});
  auto votes = parallel_map(3, 3, [&](std::size_t i) {
    try {
      return parse_vote(judges[i]->chat(user_request(prompt, 0.0, false)).text);
    } catch (const AllEndpointsFailed&) {
      if (transport_failures) ++*transport_failures;
      return 0;
    }
  });
  return majority_supported({votes[0], votes[1], votes[2]});
}

std::string normalize_answer(std::string_view s) {
  std::string out = ascii_lower(trim(s));
  while (!out.empty() && is_terminal_punct(out.back())) out.pop_back();
  while (!out.empty() && (out.front() == '"' || out.front() == '\'')) out.erase(0, 1);
  return std::string(trim(out));
}

std::string difficulty_reply_answer(std::string_view reply) {
  if (auto obj = extract_balanced_object(reply)) {
    json j = json::parse(*obj, nullptr, false);
    if (j.is_object() && j.contains("answer")) {
      const json& a = j["answer"];
      if (a.is_string()) return a.get<std::string>();
      if (a.is_boolean()) return a.get<bool>() ? "True" : "False";
      return a.dump();
    }
  }
  // Non-JSON replies are graded as given; a leading "answer:" is dropped.
  std::string t(trim(reply));
  static const std::regex lead(R"(^\s*answer\s*[:：]\s*)", std::regex::icase);
  return std::regex_replace(t, lead, "");
}

bool grade_answer(std::string_view template_name, std::string_view model_reply,
                  std::string_view reference) {
  std::string got = normalize_answer(model_reply);
  std::string want = normalize_answer(reference);
  if (template_name == "mcq") {
    // "B", "B) Paris", "(b)" all grade as option b.
    static const std::regex opt(R"(^\(?([a-d])(\)|\.|:|\s|$))");
    std::smatch m;
    if (!std::regex_search(got, m, opt)) return false;
    return m[1].str() == want;
  }
  if (template_name == "true_false") {
    static const std::regex tf(R"(^(true|false)\b)");
    std::smatch m;
    if (!std::regex_search(got, m, tf)) return false;
    return m[1].str() == want;
  }
  return !got.empty() && got == want;
}

DifficultyLevel classify_difficulty(bool weak_correct, bool strong_correct) {
  if (!strong_correct) return DifficultyLevel::kHard;
  return weak_correct ? DifficultyLevel::kSimple : DifficultyLevel::kMedium;
}

Grader default_grader() {
  return [](const QARecord& r, std::string_view reply) {
    return grade_answer(r.template_name, difficulty_reply_answer(reply), r.answer);
  };
}

DifficultyLevel score_difficulty(const QARecord& record, const EndpointPool& weak,
                                 const EndpointPool& strong, const Grader& grader,
                                 const PromptLibrary& prompts) {
  std::string prompt =
      prompts.render("difficulty", {{"question", record.question}, {"support", record.trace_ref}});
  std::string strong_reply = strong.chat(user_request(prompt, 0.0, true)).text;
  bool strong_ok = grader(record, strong_reply);
  if (!strong_ok) return DifficultyLevel::kHard;  // weak's outcome is irrelevant
  std::string weak_reply = weak.chat(user_request(prompt, 0.0, true)).text;
  return classify_difficulty(grader(record, weak_reply), true);
}

std::optional<int> parse_complexity(std::string_view reply) {
  std::string_view t = trim(reply);
  if (t.size() == 1 && t[0] >= '1' && t[0] <= '5') return t[0] - '0';
  static const std::regex num(R"(^\D*?(\d+)\D*$)");
  std::string s(t);
  std::smatch m;
  if (!std::regex_match(s, m, num)) return std::nullopt;
  if (m[1].length() > 1) return std::nullopt;
  int v = std::stoi(m[1].str());
  if (v < 1 || v > 5) return std::nullopt;
  return v;
}

int score_complexity(const QARecord& record, const EndpointPool& judge,
                     const PromptLibrary& prompts) {
  std::string prompt = prompts.render("complexity", {{"hop_num", std::to_string(record.hop_num)},
                                                     {"question", record.question},
                                                     {"answer", record.answer},
                                                     {"cot", record.reasoning_path}});
  std::string reply = judge.chat(user_request(prompt, 0.0, false)).text;
  if (auto v = parse_complexity(reply)) return *v;
  std::string repair = prompts.render("complexity_repair", {{"previous", reply}});
  reply = judge.chat(user_request(repair + "\n\n" + prompt, 0.0, false)).text;
  if (auto v = parse_complexity(reply)) return *v;
  throw ComplexityParseError("record " + record.id + ": unusable rating '" +
                             std::string(trim(reply)) + "'");
}

void FilterPolicy::validate() const {
  if (!(dedup_threshold > 0.0 && dedup_threshold <= 1.0)) {
    throw ConfigError("quality.dedup_threshold must lie in (0, 1]");
  }
  if (complexity_min < 0 || complexity_min > 5) {
    throw ConfigError("quality.complexity_min must lie in [0, 5]");
  }
}

nlohmann::ordered_json policy_to_json(const FilterPolicy& p) {
  nlohmann::ordered_json j;
  j["dedup_threshold"] = p.dedup_threshold;
  j["require_support"] = p.require_support;
  j["difficulty_keep"] = nlohmann::ordered_json::array();
  for (auto d : p.difficulty_keep) j["difficulty_keep"].push_back(std::string(difficulty_name(d)));
  j["complexity_min"] = p.complexity_min;
  return j;
}

FilterPolicy policy_from_json(const json& j) {
  FilterPolicy p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw ConfigError("quality: expected an object");
  try {
    if (j.contains("dedup_threshold")) p.dedup_threshold = j.at("dedup_threshold").get<double>();
    if (j.contains("require_support")) p.require_support = j.at("require_support").get<bool>();
    if (j.contains("complexity_min")) p.complexity_min = j.at("complexity_min").get<int>();
    if (j.contains("difficulty_keep")) {
      for (const json& v : j.at("difficulty_keep")) {
        auto d = parse_difficulty(v.get<std::string>());
        if (!d) throw ConfigError("quality.difficulty_keep: unknown level " + v.dump());
        p.difficulty_keep.insert(*d);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("quality: ") + e.what());
  }
  p.validate();
  return p;
}

FilterResult filter_dataset(const std::vector<QARecord>& records, const FilterPolicy& policy) {
  FilterResult out;
  for (const QARecord& r : records) {
    std::string reason;
    if (policy.require_support) {
      if (!r.scores.support) throw MissingScore("record " + r.id + " has no support score");
      if (!*r.scores.support) reason = "support";
    }
    if (reason.empty() && !policy.difficulty_keep.empty()) {
      if (!r.scores.difficulty) throw MissingScore("record " + r.id + " has no difficulty score");
      if (!policy.difficulty_keep.count(*r.scores.difficulty)) reason = "difficulty";
    }
    if (reason.empty() && policy.complexity_min > 0) {
      if (!r.scores.complexity) throw MissingScore("record " + r.id + " has no complexity score");
      if (*r.scores.complexity < policy.complexity_min) reason = "complexity";
    }
    if (reason.empty()) {
      out.kept.push_back(r);
    } else {
      ++out.dropped[reason];
    }
  }
  return out;
}

void score_all(std::vector<QARecord>& records, const Gateway& gateway,
               const PromptLibrary& prompts, ScoringCounters& counters) {
  std::atomic<std::size_t> failures{0};
  const EndpointPool* complexity =
      gateway.complexity ? gateway.complexity.get() : gateway.chat.get();
  bool do_support = !gateway.judges.empty();
  bool do_difficulty = gateway.weak && gateway.strong;
  parallel_map(records.size(), gateway.workers, [&](std::size_t i) {
    QARecord& r = records[i];
    if (do_support) r.scores.support = score_support(r, gateway.judges, prompts, &failures);
    if (do_difficulty) {
      r.scores.difficulty = score_difficulty(r, *gateway.weak, *gateway.strong,
                                             default_grader(), prompts);
    }
    if (complexity) r.scores.complexity = score_complexity(r, *complexity, prompts);
    return 0;
  });
  counters.judge_failures += failures.load();
}

}  // namespace kgsynth
