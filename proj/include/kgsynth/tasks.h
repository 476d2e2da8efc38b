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

#ifndef KGSYNTH_TASKS_H_
#define KGSYNTH_TASKS_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgsynth/graph.h"

namespace kgsynth {

// Inclusive count window; no max means unbounded.
struct CountRange {
  std::size_t min = 0;
  std::optional<std::size_t> max;

  bool admits(std::size_t n) const { return n >= min && (!max || n <= *max); }
  bool operator==(const CountRange&) const = default;
};

// Attribute filters only constrain entity nodes. Keys: "type" (entity type),
// "name", "label" (must be one of the labels), anything else an attr key.
using AttributeFilters = std::map<std::string, std::string>;

struct StartCriteria {
  std::vector<NodeType> node_types;  // empty: any type
  std::size_t min_out_degree = 0;    // degree in the sampling graph
  AttributeFilters attribute_filters;
  bool operator==(const StartCriteria&) const = default;
};

struct NeighborConstraints {
  std::vector<EdgeKind> allowed_kinds;  // empty: any kind
  std::size_t min_degree = 0;
  std::optional<std::size_t> max_degree;
  AttributeFilters attribute_filters;
  bool operator==(const NeighborConstraints&) const = default;
};

// A sampling strategy: path shape, counts per node type, prompt template.
struct TaskConfig {
  std::string task_name;
  std::string code;
  std::string template_name = "open_qa";  // open_qa | mcq | true_false
  // Types absent from the map are unconstrained.
  std::map<NodeType, CountRange> required_node_counts;
  std::size_t max_depth = 4;
  std::size_t max_nodes = 8;
  StartCriteria start_criteria;
  NeighborConstraints neighbor_constraints;
  bool fuzzify = false;
  bool pronoun_substitute = false;
  std::size_t samples_requested = 4;
  // Node budget k for augmented chain sampling.
  std::size_t subgraph_size = 12;

  CountRange range_for(NodeType t) const;
  // Throws ConfigError on a broken window or template.
  void validate() const;
  bool operator==(const TaskConfig&) const = default;
};

// The 32 tasks of the modality taxonomy, in table order.
const std::vector<TaskConfig>& load_task_presets();
// By full name or short code; nullptr when unknown.
const TaskConfig* find_preset(std::string_view name_or_code);

nlohmann::ordered_json task_to_json(const TaskConfig& task);
// Accepts a full record, or {"base": "<preset name or code>", ...overrides}.
// Throws ConfigError.
TaskConfig task_from_json(const nlohmann::json& j);

bool is_known_template(std::string_view name);

}  // namespace kgsynth

#endif  // KGSYNTH_TASKS_H_
