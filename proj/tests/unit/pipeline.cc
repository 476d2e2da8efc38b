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


#include <filesystem>
#include <string>
#include <unistd.h>

#include "doctest.h"
#include "kgsynth/errors.h"
#include "kgsynth/pipeline.h"
#include "kgsynth/storage.h"
#include "kgsynth/text.h"
#include "testkit.h"

using namespace kgsynth;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json toy_document() {
  return json::parse(read_file(testkit::toy_dir() + "/config.json"));
}

PipelineConfig toy_config(const ConfigOverrides& o = {}) {
  return parse_config(toy_document(), testkit::toy_dir(), o);
}

fs::path scratch(const std::string& tag) {
  fs::path p = fs::temp_directory_path() /
               ("kgsynth_pipeline_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

void expect_config_error(const std::string& assignment, const std::string& key) {
  CAPTURE(assignment);
  ConfigOverrides o;
  o.set = {assignment};
  try {
    toy_config(o);
    FAIL("accepted " << assignment);
  } catch (const ConfigError& e) {
    CHECK(contains(e.what(), key));
  }
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("overrides set dotted keys") {
  json doc = json::object();
  apply_override(doc, "a.b.c=3");
  apply_override(doc, "a.b.d=[1, 2]");
  apply_override(doc, "name=plain text");
  apply_override(doc, "flag=true");
  apply_override(doc, "empty=");
  CHECK(doc["a"]["b"]["c"] == 3);
  CHECK(doc["a"]["b"]["d"] == json::array({1, 2}));
  CHECK(doc["name"] == "plain text");
  CHECK(doc["flag"] == true);
  CHECK(doc["empty"] == "");
  CHECK_THROWS_AS(apply_override(doc, "a.b.c.x=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "a..b=1"), ConfigError);
}

TEST_CASE("toy config parses with resolved paths") {
  PipelineConfig c = toy_config();
  CHECK(c.seed == 7);
  CHECK(c.domain == "astronomy");
  CHECK(c.schema_path == (fs::path(testkit::toy_dir()) / "schema.json").string());
  CHECK(c.out_dir == (fs::path(testkit::toy_dir()) / "out").string());
  CHECK(c.documents.size() == 2);
  CHECK(c.builder.chunk.max_chars == 400);
  CHECK(c.gateway.mock);
  CHECK(c.tasks.size() == 32);
  for (const auto& t : c.tasks) CHECK(t.samples_requested == 3);
  CHECK(c.policy.require_support);
  CHECK(c.policy.complexity_min == 4);
  CHECK(c.out("x.json") == (fs::path(c.out_dir) / "x.json").string());
}

TEST_CASE("command-line overrides win") {
  ConfigOverrides o;
  o.seed = 99;
  o.out_dir = "/tmp/elsewhere";
  o.set = {"domain=biology", "sampling.tasks=[\"SC\", \"STMH\"]", "gateway.mock=false"};
  o.mock = true;
  PipelineConfig c = toy_config(o);
  CHECK(c.seed == 99);
  CHECK(c.out_dir == "/tmp/elsewhere");
  CHECK(c.domain == "biology");
  CHECK(c.gateway.mock);  // --mock beats the --set
  REQUIRE(c.tasks.size() == 2);
  CHECK(c.tasks[1].task_name == "Single-Table Multi-hop QA");
  CHECK(c.document["seed"] == 99);
}

TEST_CASE("bad values name their key") {
  expect_config_error("schema_path=null", "schema_path");
  expect_config_error("builder.chunk_max_chars=0", "builder.chunk_max_chars");
  expect_config_error("builder.chunk_max_chars=-5", "builder.chunk_max_chars");
  expect_config_error("builder.embed_batch=2.5", "builder.embed_batch");
  expect_config_error("builder.extraction_retries=-1", "builder.extraction_retries");
  expect_config_error("gateway.retry.max_attempts=0", "gateway.retry.max_attempts");
  expect_config_error("gateway.workers=\"many\"", "gateway.workers");
  expect_config_error("gateway.judges=[[], []]", "gateway.judges");
  expect_config_error("sampling.tasks=[\"No Such Task\"]", "sampling.tasks");
  expect_config_error("sampling.tasks=[\"SC\", \"SC\"]", "duplicate");
  expect_config_error("sampling.samples_requested=-1", "sampling.samples_requested");
  expect_config_error("quality.dedup_threshold=2", "quality");
  CHECK_THROWS_AS(parse_config(json::array(), "."), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("inline task records") {
  ConfigOverrides o;
  o.set = {R"(sampling.tasks=[{"base": "SC", "task_name": "mine", "template": "true_false"}])"};
  PipelineConfig c = toy_config(o);
  REQUIRE(c.tasks.size() == 1);
  CHECK(c.tasks[0].task_name == "mine");
  CHECK(c.tasks[0].template_name == "true_false");
}

TEST_CASE("validate-config writes nothing and catches missing files") {
  ConfigOverrides o;
  fs::path out = scratch("validate");
  o.out_dir = out.string();
  RunResult r = run_command("validate-config", toy_config(o));
  CHECK(r.status == 0);
  CHECK(r.error.empty());
  CHECK_FALSE(fs::exists(out));

  o.set = {"corpus.documents=[\"docs/missing.json\"]"};
  RunResult bad = run_command("validate-config", toy_config(o));
  CHECK(bad.status == 2);
  CHECK(contains(bad.error, "corpus.documents"));

  RunResult unknown = run_command("frobnicate", toy_config());
  CHECK(unknown.status == 2);
  CHECK(contains(unknown.error, "unknown command"));
}

TEST_CASE("real endpoints are required without mock") {
  ConfigOverrides o;
  o.set = {"gateway.mock=false"};
  RunResult r = run_command("validate-config", toy_config(o));
  CHECK(r.status == 2);
  CHECK(contains(r.error, "gateway.chat"));
}

TEST_CASE("toy pipeline end to end, then stage by stage") {
  ConfigOverrides o;
  fs::path out = scratch("run");
  o.out_dir = out.string();
  PipelineConfig c = toy_config(o);
  RunResult r = run_command("pipeline", c);
  INFO(r.error);
  REQUIRE(r.status == 0);
  for (const std::string& a : r.artifacts) CHECK(fs::exists(a));
  CHECK(r.stages.size() == 6);
  std::vector<QARecord> data = read_dataset(c.out(c.outputs.dataset));
  CHECK_FALSE(data.empty());
  for (const QARecord& q : data) {
    CHECK(q.domain == "astronomy");
    CHECK(*q.scores.support);
    CHECK(*q.scores.complexity >= 4);
  }
  json manifest = json::parse(read_file(c.out(c.outputs.manifest)));
  CHECK(manifest.contains("stages"));

  // The same outputs through individual commands in a second directory.
  ConfigOverrides o2;
  fs::path out2 = scratch("stages");
  o2.out_dir = out2.string();
  PipelineConfig c2 = toy_config(o2);
  for (const char* cmd : {"build-graph", "sample", "generate-qa", "filter", "analyze", "export"}) {
    CAPTURE(cmd);
    RunResult s = run_command(cmd, c2);
    INFO(s.error);
    REQUIRE(s.status == 0);
  }
  for (const std::string* name : {&c.outputs.graph, &c.outputs.traces, &c.outputs.dataset,
                                  &c.outputs.stats_json, &c.outputs.cypher}) {
    CAPTURE(*name);
    CHECK(read_file(c.out(*name)) == read_file(c2.out(*name)));
  }
  fs::remove_all(out);
  fs::remove_all(out2);
}

TEST_CASE("a later stage without its input fails cleanly") {
  ConfigOverrides o;
  fs::path out = scratch("orphan");
  o.out_dir = out.string();
  RunResult r = run_command("filter", toy_config(o));
  CHECK(r.status != 0);
  CHECK_FALSE(r.error.empty());
  fs::remove_all(out);
}

}  // TEST_SUITE
