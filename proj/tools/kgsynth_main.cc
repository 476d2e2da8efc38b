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

// kgsynth: build a multimodal knowledge graph from parsed documents, sample
// reasoning traces from it, and synthesize and filter QA data.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kgsynth/errors.h"
#include "kgsynth/pipeline.h"

int main(int argc, char** argv) {
  CLI::App app{"kgsynth: knowledge-graph based QA data synthesis"};
  std::string command;
  std::string config_path;
  kgsynth::ConfigOverrides overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  app.add_option("command", command, "build-graph | sample | generate-qa | filter | analyze | "
                                     "export | pipeline | validate-config")
      ->required()
      ->check(CLI::IsMember(kgsynth::kCommands));
  app.add_option("--config", config_path, "pipeline config document (JSON)")->required();
  app.add_option("--set", overrides.set, "dotted-key override, key=value (repeatable)");
  app.add_option("--seed", seed, "global seed");
  app.add_flag("--mock", overrides.mock, "use the scripted mock gateway");
  app.add_option("--out-dir", out_dir, "directory for all artifacts");
  CLI11_PARSE(app, argc, argv);
  overrides.seed = seed;
  overrides.out_dir = out_dir;

  kgsynth::PipelineConfig config;
  try {
    config = kgsynth::load_config(config_path, overrides);
  } catch (const kgsynth::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  kgsynth::RunResult r = kgsynth::run_command(command, config);
  for (const auto& s : r.stages) {
    std::cerr << s.name << ": " << s.counters.dump() << " (" << s.seconds << " s)\n";
  }
  for (const auto& a : r.artifacts) std::cout << a << "\n";
  if (r.status != 0) std::cerr << "error: " << r.error << "\n";
  else if (command == "validate-config") std::cerr << "config ok\n";
  return r.status;
}
