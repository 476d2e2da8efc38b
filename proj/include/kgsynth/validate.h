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

#ifndef KGSYNTH_VALIDATE_H_
#define KGSYNTH_VALIDATE_H_

#include <string>
#include <vector>

#include "kgsynth/graph.h"

namespace kgsynth {

struct Violation {
  // Offending node id (for edge rules, the edge source).
  std::string node_id;
  // Stable rule name, e.g. "assertion.tail", "edge.kind".
  std::string rule;
  std::string message;

  bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

// Checks every type, reference and edge invariant. Nodes are visited in
// insertion order, then edges, so the report is deterministic.
ValidationReport validate_graph(const KnowledgeGraph& graph);

}  // namespace kgsynth

#endif  // KGSYNTH_VALIDATE_H_
