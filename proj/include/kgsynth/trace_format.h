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

#ifndef KGSYNTH_TRACE_FORMAT_H_
#define KGSYNTH_TRACE_FORMAT_H_

#include <map>
#include <string>
#include <vector>

#include "kgsynth/graph.h"
#include "kgsynth/sampling.h"
#include "kgsynth/schema.h"

namespace kgsynth {

// One node of a rendered trace. `name` is set for entities only.
struct ContextBlock {
  NodeId id;
  NodeType type = NodeType::kEntity;
  std::string name;
  std::string entity_type;
  // (label, text) lines under the header, e.g. ("desc", "..."), ("content", "<table>...").
  std::vector<std::pair<std::string, std::string>> fields;
};

struct RelationLine {
  NodeId head;
  NodeId tail;
  std::string head_name;
  std::string relation;
  std::string tail_name;
  std::string desc;
};

// Structured prompt context for one trace: path blocks in path order,
// relation lines (path assertions first, then other assertions among trace
// entities), then augmenting blocks.
struct TraceContext {
  std::vector<ContextBlock> path_blocks;
  std::vector<RelationLine> relations;
  std::vector<ContextBlock> augment_blocks;

  // Entity ids in first-appearance order over path blocks, relation lines and
  // augment blocks.
  std::vector<NodeId> entity_order() const;
  std::string render() const;
};

// Throws DanglingTrace when an id no longer resolves.
TraceContext format_trace(const Trace& trace, const KnowledgeGraph& graph);

struct Fuzzified {
  TraceContext context;
  // Surface form -> placeholder, one entry per replaced entity name.
  std::map<std::string, std::string> replacements;
};

// Replaces every entity name whose type has a placeholder, everywhere in the
// context (longest names first).
Fuzzified fuzzify_entities(const TraceContext& context, const Schema& schema);

// Gives each entity a token E1..En by first appearance; relation lines use the
// tokens and entity blocks keep a legend without the name.
TraceContext substitute_pronouns(const TraceContext& context);

}  // namespace kgsynth

#endif  // KGSYNTH_TRACE_FORMAT_H_
