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

#ifndef KGSYNTH_BUILDER_H_
#define KGSYNTH_BUILDER_H_

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgsynth/gateway.h"
#include "kgsynth/graph.h"
#include "kgsynth/ingest.h"
#include "kgsynth/prompts.h"
#include "kgsynth/schema.h"

namespace kgsynth {

struct ChunkParams {
  std::vector<std::string> separators = {"\n\n", "\n", "。", ". "};
  std::size_t max_chars = 600;
};

struct BuilderOptions {
  ChunkParams chunk;
  // Blocks taken on each side of a formula when describing it.
  int formula_context_k = 2;
  double cluster_threshold = 0.85;
  // Extra attempts after a malformed structured reply.
  int extraction_retries = 2;
  // Texts per embedding request.
  std::size_t embed_batch = 64;
  const PromptLibrary* prompts = nullptr;  // null: built-in set

  const PromptLibrary& prompt_library() const {
    return prompts ? *prompts : PromptLibrary::builtin();
  }
};

// One triplet file, already loaded.
struct TripletSource {
  std::string path;
  std::vector<RawTriplet> triplets;
};

// Counters surfaced in the run manifest and analysis. Only ever incremented.
struct BuildReport {
  std::size_t extraction_parse_failures = 0;  // records skipped after retries
  std::size_t dropped_unknown_type = 0;       // entities with a type not in the schema
  std::size_t dropped_relation = 0;           // relation not permitted by the schema
  std::size_t dropped_dangling = 0;           // assertion endpoint not found
  std::size_t discovery_parse_failures = 0;
  std::size_t recall_rejected = 0;            // candidate with no supporting info
  std::size_t discovered_entities = 0;
  std::size_t discovered_assertions = 0;
  std::size_t grouping_parse_failures = 0;
  std::size_t merged_entities = 0;            // entities absorbed into another
  std::size_t merged_relations = 0;           // relation names renamed
  std::size_t collapsed_assertions = 0;       // became self-loops after merging
  std::size_t pruned_entities = 0;
  std::size_t pruned_assertions = 0;
  // validate_graph violations after each stage.
  std::array<std::size_t, 4> stage_violations{};
  std::vector<std::string> messages;

  nlohmann::ordered_json to_json() const;
};

// Documents, chunks, modal elements with descriptions, and triplet-file
// entities/assertions. Throws SchemaUnknown and gateway errors.
KnowledgeGraph build_stage1(const std::vector<ParsedDocument>& documents,
                            const std::vector<TripletSource>& triplets, const Schema& schema,
                            const Gateway& gateway, const BuilderOptions& options,
                            BuildReport& report);

// Schema-constrained extraction from every chunk and modal element.
KnowledgeGraph build_stage2(KnowledgeGraph graph, const Schema& schema, const Gateway& gateway,
                            const BuilderOptions& options, BuildReport& report);

// Relation discovery around existing entities, with recall-gated new entities.
KnowledgeGraph build_stage3(KnowledgeGraph graph, const Schema& schema, const Gateway& gateway,
                            const BuilderOptions& options, BuildReport& report);

// Embedding clustering with confirmation, entity merging, relation
// normalization, and removal of single-provenance modal entities.
KnowledgeGraph build_stage4(KnowledgeGraph graph, const Schema& schema, const Gateway& gateway,
                            const BuilderOptions& options, BuildReport& report);

// Stage 4 parts, exposed for tests.
struct MergeGroup {
  std::vector<NodeId> members;
};
// Merges each group into one entity and rewires assertions and edges.
KnowledgeGraph merge_entities(const KnowledgeGraph& graph, const std::vector<MergeGroup>& groups,
                              BuildReport& report);
// Renames relations (old -> new) and merges assertions that coincide.
KnowledgeGraph rename_relations(const KnowledgeGraph& graph,
                                const std::map<std::string, std::string>& renames,
                                BuildReport& report);
// Removes every entity that carries the modal label and has exactly one
// provenance entry, with its assertions.
void prune_modal_singletons(KnowledgeGraph& graph, BuildReport& report);

// All four stages; records validation counts per stage in the report.
KnowledgeGraph build_graph(const std::vector<ParsedDocument>& documents,
                           const std::vector<TripletSource>& triplets, const Schema& schema,
                           const Gateway& gateway, const BuilderOptions& options,
                           BuildReport& report);

// Caption identifiers a text mentions, as "image:2", "table:1", "formula:5".
std::vector<std::string> find_element_references(std::string_view text);
// The identifier an element's caption (or, for formulas, \tag) declares.
std::optional<std::string> element_label(BlockKind kind, std::string_view caption,
                                         std::string_view content);

}  // namespace kgsynth

#endif  // KGSYNTH_BUILDER_H_
