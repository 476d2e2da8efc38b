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
#include <memory>
#include <string>

#include "doctest.h"
#include "kgsynth/errors.h"
#include "kgsynth/schema.h"
#include "kgsynth/synthesis.h"
#include "kgsynth/text.h"
#include "testkit.h"

using namespace kgsynth;
using nlohmann::json;

namespace {

Schema empty_schema() {
  return Schema::parse(R"({"name": "s", "entity_types": [], "relation_types": []})");
}

// Every non-document, non-assertion node as one flat path.
Trace whole_graph_trace(const KnowledgeGraph& g, const std::string& task) {
  Trace t;
  for (const NodeId& id : g.node_ids()) {
    NodeType ty = node_type(g.at(id));
    if (ty != NodeType::kDocument && ty != NodeType::kAssertion) t.path_nodes.push_back(id);
  }
  t.task_name = task;
  return t;
}

TaskConfig task_named(const std::string& name, const std::string& tmpl) {
  TaskConfig t = *find_preset("SC");
  t.task_name = name;
  t.template_name = tmpl;
  return t;
}

}  // namespace

TEST_SUITE("synthesis") {

TEST_CASE("canonical answers per template") {
  CHECK(canonical_answer("mcq", "b") == std::optional<std::string>("B"));
  CHECK(canonical_answer("mcq", " (C). ") == std::optional<std::string>("C"));
  CHECK_FALSE(canonical_answer("mcq", "E").has_value());
  CHECK_FALSE(canonical_answer("mcq", "AB").has_value());
  CHECK_FALSE(canonical_answer("mcq", 1).has_value());
  CHECK(canonical_answer("true_false", true) == std::optional<std::string>("True"));
  CHECK(canonical_answer("true_false", "FALSE.") == std::optional<std::string>("False"));
  CHECK_FALSE(canonical_answer("true_false", "maybe").has_value());
  CHECK(canonical_answer("open_qa", "  Kepler ") == std::optional<std::string>("Kepler"));
  CHECK(canonical_answer("open_qa", 42) == std::optional<std::string>("42"));
  CHECK_FALSE(canonical_answer("open_qa", "   ").has_value());
  CHECK_FALSE(canonical_answer("open_qa", json::array()).has_value());
}

TEST_CASE("reply parsing") {
  auto ok = parse_qa_reply(
      R"(Here you go: {"question": " Who? ", "answer": "a", "reasoning_path": "x -> y"} thanks)",
      "mcq");
  REQUIRE(ok);
  CHECK(ok->question == "Who?");
  CHECK(ok->answer == "A");
  CHECK(ok->reasoning_path == "x -> y");

  std::string why;
  CHECK_FALSE(parse_qa_reply("no object", "open_qa", &why));
  CHECK(contains(why, "no JSON object"));
  CHECK_FALSE(parse_qa_reply(R"({"question": "q", "reasoning_path": "r"})", "open_qa", &why));
  CHECK(contains(why, "answer"));
  CHECK_FALSE(parse_qa_reply(R"({"question": "", "answer": "a", "reasoning_path": "r"})",
                             "open_qa", &why));
  CHECK(contains(why, "question"));
  CHECK_FALSE(parse_qa_reply(R"({"question": "q", "answer": "perhaps", "reasoning_path": "r"})",
                             "true_false", &why));
  CHECK(contains(why, "domain"));
  // Braces inside strings do not confuse the object scan.
  auto braces = parse_qa_reply(R"({"question": "what is {x}?", "answer": "}", "reasoning_path": "r"})",
                               "open_qa");
  REQUIRE(braces);
  CHECK(braces->question == "what is {x}?");
}

TEST_CASE("prompt rendering") {
  for (const char* t : {"open_qa", "mcq", "true_false"}) {
    std::string p = render_prompt("CONTEXT-MARKER", t);
    CHECK(contains(p, "CONTEXT-MARKER"));
  }
  CHECK_THROWS_AS(render_prompt("c", "essay"), UnknownTemplate);
}

TEST_CASE("record json round trip and field errors") {
  Rng rng(3);
  for (int i = 0; i < 150; ++i) {
    QARecord r = testkit::random_record(rng, i % 2 == 0);
    CHECK(record_from_json(json::parse(record_to_json(r).dump())) == r);
  }
  QARecord r = testkit::random_record(rng);
  json j = json::parse(record_to_json(r).dump());
  auto expect_field = [](json bad, const std::string& f) {
    try {
      record_from_json(bad);
      FAIL("accepted a bad record");
    } catch (const FormatError& e) {
      CHECK(e.field() == f);
    }
  };
  json a = j;
  a.erase("question");
  expect_field(a, "question");
  json b = j;
  b["hop_num"] = -1;
  expect_field(b, "hop_num");
  json c = j;
  c["scores"] = {{"difficulty", "impossible"}};
  expect_field(c, "scores.difficulty");
  json d = j;
  d["scores"] = {{"support", 1}};
  expect_field(d, "scores.support");
}

TEST_CASE("generate_qa with a repair turn") {
  Rng rng(8);
  KnowledgeGraph g = testkit::random_knowledge_graph(rng, false);
  TaskConfig task = task_named("t-mcq", "mcq");
  Trace tr = whole_graph_trace(g, task.task_name);

  // First reply is out of domain, the repair succeeds.
  auto p = std::make_shared<testkit::ScriptedProvider>("m", [](const std::string& prompt) {
    if (contains(prompt, "Previous reply:")) {
      return std::string(R"({"question": "Which?", "answer": "d", "reasoning_path": "a -> b"})");
    }
    return std::string(R"({"question": "Which?", "answer": "Z", "reasoning_path": "a -> b"})");
  });
  Gateway gw;
  gw.chat = testkit::pool_of(p);
  QARecord r = generate_qa(tr, g, task, empty_schema(), gw, {"physics", nullptr});
  CHECK(p->calls() == 2);
  CHECK(contains(p->prompts()[1], "exactly one of A, B, C or D"));
  CHECK(r.answer == "D");
  CHECK(r.domain == "physics");
  CHECK(r.template_name == "mcq");
  CHECK(r.trace_hash == trace_hash(tr));
  CHECK(r.trace_ref == format_trace(tr, g).render());
  CHECK(r.id.rfind("qa:", 0) == 0);
  // Same inputs, same record.
  CHECK(generate_qa(tr, g, task, empty_schema(), gw, {"physics", nullptr}) == r);

  auto never = std::make_shared<testkit::ScriptedProvider>(
      "m", [](const std::string&) { return std::string("no json at all"); });
  Gateway bad;
  bad.chat = testkit::pool_of(never);
  CHECK_THROWS_AS(generate_qa(tr, g, task, empty_schema(), bad), GenerationParseError);
  CHECK(never->calls() == 2);
}

TEST_CASE("generate_all counts failures and sorts") {
  Rng rng(12);
  KnowledgeGraph g = testkit::random_knowledge_graph(rng, false);
  std::map<std::string, TaskConfig> tasks = {{"b-open", task_named("b-open", "open_qa")},
                                             {"a-tf", task_named("a-tf", "true_false")}};
  std::vector<Trace> traces;
  for (const char* name : {"b-open", "a-tf", "b-open"}) {
    Trace t = whole_graph_trace(g, name);
    t.hop_num = traces.size();  // distinct hashes
    traces.push_back(t);
  }
  // Every prompt gets an open answer; the true_false trace fails twice.
  auto p = std::make_shared<testkit::ScriptedProvider>("m", [](const std::string&) {
    return std::string(R"({"question": "q", "answer": "Kepler", "reasoning_path": "r"})");
  });
  Gateway gw;
  gw.chat = testkit::pool_of(p);
  gw.workers = 3;
  SynthesisCounters counters;
  auto out = generate_all(traces, g, tasks, empty_schema(), gw, {}, counters);
  CHECK(counters.parse_failures == 1);
  CHECK(counters.generated == 2);
  REQUIRE(out.size() == 2);
  CHECK(out[0].trace_hash < out[1].trace_hash);

  traces.push_back(whole_graph_trace(g, "unknown"));
  CHECK_THROWS_AS(generate_all(traces, g, tasks, empty_schema(), gw, {}, counters), ConfigError);
}

TEST_CASE("canonical order is by task, trace hash, id") {
  Rng rng(4);
  std::vector<QARecord> recs;
  for (int i = 0; i < 60; ++i) {
    QARecord r = testkit::random_record(rng);
    r.task_name = std::string(1, static_cast<char>('a' + rng.uniform_index(3)));
    r.trace_hash = std::string(1, static_cast<char>('0' + rng.uniform_index(3)));
    recs.push_back(r);
  }
  std::vector<QARecord> shuffled = recs;
  std::reverse(shuffled.begin(), shuffled.end());
  sort_canonical(recs);
  sort_canonical(shuffled);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    CHECK(std::tie(recs[i - 1].task_name, recs[i - 1].trace_hash, recs[i - 1].id) <=
          std::tie(recs[i].task_name, recs[i].trace_hash, recs[i].id));
  }
  std::vector<std::string> a, b;
  for (auto& r : recs) a.push_back(r.id);
  for (auto& r : shuffled) b.push_back(r.id);
  CHECK(a == b);
}

TEST_CASE("difficulty names") {
  for (auto d : {DifficultyLevel::kSimple, DifficultyLevel::kMedium, DifficultyLevel::kHard}) {
    CHECK(parse_difficulty(difficulty_name(d)) == std::optional<DifficultyLevel>(d));
  }
  CHECK_FALSE(parse_difficulty("extreme").has_value());
}

}  // TEST_SUITE
