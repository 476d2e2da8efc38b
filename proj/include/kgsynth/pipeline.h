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

#ifndef KGSYNTH_PIPELINE_H_
#define KGSYNTH_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgsynth/builder.h"
#include "kgsynth/gateway.h"
#include "kgsynth/prompts.h"
#include "kgsynth/quality.h"
#include "kgsynth/schema.h"
#include "kgsynth/tasks.h"

namespace kgsynth {

// Command-line adjustments applied on top of the config document.
struct ConfigOverrides {
  // "dotted.key=value"; value is read as JSON when it parses, else a string.
  std::vector<std::string> set;
  std::optional<std::uint64_t> seed;
  bool mock = false;
  std::optional<std::string> out_dir;
};

struct EndpointSpec {
  std::string base_url;
  std::string model;
  std::string auth_env;
};

struct GatewayConfig {
  bool mock = false;
  std::string mock_fixtures;  // resolved path; empty: no rules
  std::size_t embedding_dim = 64;
  std::size_t max_in_flight = 4;
  std::size_t workers = 4;
  RetryPolicy retry;
  double extraction_temperature = 0.2;
  double generation_temperature = 0.7;
  std::vector<EndpointSpec> chat, vision, embedding, weak, strong, complexity;
  std::vector<std::vector<EndpointSpec>> judges;
};

struct OutputPaths {
  std::string graph = "graph.json";
  std::string graph_stats = "graph_stats.json";
  std::string build_report = "build_report.json";
  std::string cypher = "graph.cypher";
  std::string traces = "traces.jsonl";
  std::string candidates = "candidates.jsonl";
  std::string scored = "scored.jsonl";
  std::string dataset = "dataset.jsonl";
  std::string filter_report = "filter_report.json";
  std::string stats_json = "stats.json";
  std::string stats_text = "stats.txt";
  std::string counters = "counters.json";
  std::string manifest = "run_manifest.json";
};

struct PipelineConfig {
  // The merged document (after overrides), kept for the manifest.
  nlohmann::json document;
  std::string base_dir;
  std::string schema_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string domain = "general";
  std::string prompts_dir;
  std::string corpus_root;
  std::vector<std::string> documents;
  std::vector<std::string> triplets;
  BuilderOptions builder;
  GatewayConfig gateway;
  std::vector<TaskConfig> tasks;
  FilterPolicy policy;
  OutputPaths outputs;

  // Absolute-or-relative path of an output inside out_dir.
  std::string out(const std::string& name) const;
};

// Throws ConfigError naming the offending key.
PipelineConfig parse_config(nlohmann::json document, const std::string& base_dir,
                            const ConfigOverrides& overrides = {});
PipelineConfig load_config(const std::string& path, const ConfigOverrides& overrides = {});
// Sets a dotted key; throws ConfigError when an intermediate is not an object.
void apply_override(nlohmann::json& doc, const std::string& assignment);

Gateway make_gateway(const PipelineConfig& config);

inline const std::vector<std::string> kCommands = {
    "build-graph", "sample", "generate-qa", "filter", "analyze", "export", "pipeline",
    "validate-config"};

struct StageRecord {
  std::string name;
  double seconds = 0;
  nlohmann::ordered_json counters;
};

struct RunResult {
  int status = 0;
  std::vector<std::string> artifacts;
  std::vector<StageRecord> stages;
  std::string error;
};

// Runs one command. Stage errors are caught, reported in the result and the
// manifest, and give a nonzero status.
RunResult run_command(const std::string& command, const PipelineConfig& config);

}  // namespace kgsynth

#endif  // KGSYNTH_PIPELINE_H_
