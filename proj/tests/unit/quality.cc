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


#include <memory>
#include <string>

#include "doctest.h"
#include "kgsynth/errors.h"
#include "kgsynth/quality.h"
#include "kgsynth/text.h"
#include "testkit.h"

using namespace kgsynth;
using nlohmann::json;

namespace {

std::shared_ptr<EndpointPool> broken_pool() {
  auto p = std::make_shared<testkit::ScriptedProvider>("down", [](const std::string&) -> std::string {
    throw ProviderError("connection refused", false);
  });
  return testkit::pool_of(p, 1);
}

QARecord record(const std::string& tmpl, const std::string& answer) {
  QARecord r;
  r.id = "qa:1";
  r.question = "Who?";
  r.answer = answer;
  r.reasoning_path = "a -> b";
  r.template_name = tmpl;
  r.trace_ref = "ctx";
  return r;
}

}  // namespace

TEST_SUITE("quality") {

TEST_CASE("votes") {
  CHECK(parse_vote("1") == 1);
  CHECK(parse_vote(" 0\n") == 0);
  CHECK(parse_vote("Score: 1") == 1);
  CHECK(parse_vote("\"1\"") == 1);
  CHECK(parse_vote("1 or 0") == 0);
  CHECK(parse_vote("10") == 0);
  CHECK(parse_vote("yes") == 0);
  CHECK(parse_vote("") == 0);
  // Majority means at least two of three.
  for (int mask = 0; mask < 8; ++mask) {
    std::array<int, 3> v{mask & 1, (mask >> 1) & 1, (mask >> 2) & 1};
    CHECK(majority_supported(v) == (v[0] + v[1] + v[2] >= 2));
  }
}

TEST_CASE("support scoring") {
  QARecord r = record("open_qa", "Kepler");
  auto yes = testkit::constant_pool("y", "1");
  auto no = testkit::constant_pool("n", "0");
  CHECK(score_support(r, {yes, yes, no}));
  CHECK_FALSE(score_support(r, {yes, no, no}));

  std::atomic<std::size_t> failures{0};
  CHECK(score_support(r, {yes, broken_pool(), yes}, PromptLibrary::builtin(), &failures));
  CHECK(failures == 1);
  CHECK_FALSE(score_support(r, {yes, broken_pool(), no}, PromptLibrary::builtin(), &failures));
  CHECK(failures == 2);

  CHECK_THROWS_AS(score_support(r, {yes, yes}), JudgeUnavailable);
  CHECK_THROWS_AS(score_support(r, {yes, yes, nullptr}), JudgeUnavailable);
}

TEST_CASE("answer normalization and grading") {
  CHECK(normalize_answer("  \"Kepler.\" ") == "kepler");
  CHECK(normalize_answer(" Kepler! ") == "kepler");
  CHECK(grade_answer("open_qa", "kepler.", "Kepler"));
  CHECK_FALSE(grade_answer("open_qa", "", ""));
  CHECK_FALSE(grade_answer("open_qa", "Newton", "Kepler"));
  CHECK(grade_answer("mcq", "B) Paris", "B"));
  CHECK(grade_answer("mcq", "(b)", "B"));
  CHECK_FALSE(grade_answer("mcq", "Because", "B"));
  CHECK_FALSE(grade_answer("mcq", "C", "B"));
  CHECK(grade_answer("true_false", "True, since ...", "True"));
  CHECK_FALSE(grade_answer("true_false", "Truely", "True"));
  CHECK_FALSE(grade_answer("true_false", "False", "True"));

  CHECK(difficulty_reply_answer(R"(sure {"answer": "B"})") == "B");
  CHECK(difficulty_reply_answer(R"({"answer": false})") == "False");
  CHECK(difficulty_reply_answer(R"({"answer": 7})") == "7");
  CHECK(difficulty_reply_answer("Answer: Kepler") == "Kepler");
}

TEST_CASE("difficulty levels") {
  CHECK(classify_difficulty(true, true) == DifficultyLevel::kSimple);
  CHECK(classify_difficulty(false, true) == DifficultyLevel::kMedium);
  CHECK(classify_difficulty(true, false) == DifficultyLevel::kHard);
  CHECK(classify_difficulty(false, false) == DifficultyLevel::kHard);

  QARecord r = record("mcq", "B");
  auto right = testkit::constant_pool("r", R"({"answer": "B"})");
  auto wrong = testkit::constant_pool("w", R"({"answer": "C"})");
  CHECK(score_difficulty(r, *right, *right) == DifficultyLevel::kSimple);
  CHECK(score_difficulty(r, *wrong, *right) == DifficultyLevel::kMedium);
  CHECK(score_difficulty(r, *right, *wrong) == DifficultyLevel::kHard);
  // A custom grader replaces the default one.
  Grader always = [](const QARecord&, std::string_view) { return true; };
  CHECK(score_difficulty(r, *wrong, *wrong, always) == DifficultyLevel::kSimple);
}

TEST_CASE("complexity ratings") {
  CHECK(parse_complexity("3") == std::optional<int>(3));
  CHECK(parse_complexity("Rating: 5/") == std::optional<int>(5));
  CHECK(parse_complexity(" 1 ") == std::optional<int>(1));
  CHECK_FALSE(parse_complexity("0").has_value());
  CHECK_FALSE(parse_complexity("6").has_value());
  CHECK_FALSE(parse_complexity("12").has_value());
  CHECK_FALSE(parse_complexity("3 or 4").has_value());
  CHECK_FALSE(parse_complexity("hard").has_value());

  QARecord r = record("open_qa", "x");
  CHECK(score_complexity(r, *testkit::constant_pool("c", "4")) == 4);
  int calls = 0;
  auto repaired = std::make_shared<testkit::ScriptedProvider>("c", [&](const std::string&) {
    return std::string(++calls == 1 ? "quite complex" : "2");
  });
  CHECK(score_complexity(r, *testkit::pool_of(repaired)) == 2);
  CHECK(repaired->calls() == 2);
  CHECK_THROWS_AS(score_complexity(r, *testkit::constant_pool("c", "very")), ComplexityParseError);
}

TEST_CASE("policy json") {
  FilterPolicy p;
  p.dedup_threshold = 0.8;
  p.require_support = true;
  p.difficulty_keep = {DifficultyLevel::kMedium, DifficultyLevel::kHard};
  p.complexity_min = 3;
  FilterPolicy back = policy_from_json(json::parse(policy_to_json(p).dump()));
  CHECK(back.dedup_threshold == p.dedup_threshold);
  CHECK(back.require_support);
  CHECK(back.difficulty_keep == p.difficulty_keep);
  CHECK(back.complexity_min == 3);
  CHECK(policy_from_json(json()).difficulty_keep.empty());

  const char* bad[] = {R"({"dedup_threshold": 0})", R"({"dedup_threshold": 1.5})",
                       R"({"complexity_min": 6})", R"({"difficulty_keep": ["extreme"]})",
                       R"({"require_support": "yes"})", R"([1])"};
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(policy_from_json(json::parse(text)), ConfigError);
  }
}

TEST_CASE("filter order, attribution and missing scores") {
  Rng rng(17);
  FilterPolicy p;
  p.require_support = true;
  p.difficulty_keep = {DifficultyLevel::kHard};
  p.complexity_min = 3;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<QARecord> recs;
    for (int i = 0; i < 12; ++i) {
      QARecord r = testkit::random_record(rng, false);
      r.scores.support = rng.bernoulli(0.7);
      r.scores.difficulty = static_cast<DifficultyLevel>(rng.uniform_index(3));
      r.scores.complexity = static_cast<int>(1 + rng.uniform_index(5));
      recs.push_back(r);
    }
    FilterResult res = filter_dataset(recs, p);
    std::size_t kept = 0;
    std::map<std::string, std::size_t> dropped;
    for (const QARecord& r : recs) {
      if (!*r.scores.support) ++dropped["support"];
      else if (*r.scores.difficulty != DifficultyLevel::kHard) ++dropped["difficulty"];
      else if (*r.scores.complexity < 3) ++dropped["complexity"];
      else {
        REQUIRE(kept < res.kept.size());
        CHECK(res.kept[kept].id == r.id);
        ++kept;
      }
    }
    CHECK(kept == res.kept.size());
    for (auto& [k, v] : dropped) CHECK(res.dropped[k] == v);
  }

  QARecord unscored = testkit::random_record(rng, false);
  CHECK_THROWS_AS(filter_dataset({unscored}, p), MissingScore);
  // All clauses off: nothing is needed and everything is kept.
  CHECK(filter_dataset({unscored}, FilterPolicy{}).kept.size() == 1);
}

TEST_CASE("dedup threshold is validated") {
  auto pool = testkit::constant_pool("e", "x");
  CHECK_THROWS_AS(deduplicate({}, *pool, 0.0), ConfigError);
  CHECK_THROWS_AS(deduplicate({}, *pool, 1.01), ConfigError);
  CHECK(deduplicate({}, *pool, 0.9).empty());
}

}  // TEST_SUITE
