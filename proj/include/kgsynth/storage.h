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

#ifndef KGSYNTH_STORAGE_H_
#define KGSYNTH_STORAGE_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kgsynth/graph.h"
#include "kgsynth/sampling.h"
#include "kgsynth/synthesis.h"

namespace kgsynth {

inline constexpr int kGraphFormatVersion = 1;

struct GraphFile {
  std::string schema_name;
  KnowledgeGraph graph;
};

nlohmann::ordered_json node_to_json(const Node& n);
nlohmann::ordered_json graph_to_json(const KnowledgeGraph& g, const std::string& schema_name);

// Throws VersionMismatch or FormatError (with byte offset).
GraphFile parse_graph(std::string_view text);

void save_graph(const KnowledgeGraph& g, const std::string& path,
                const std::string& schema_name = "");
KnowledgeGraph load_graph(const std::string& path);
GraphFile load_graph_file(const std::string& path);

// One CREATE statement per node and per edge, one statement per line.
std::string cypher_script(const KnowledgeGraph& g);
// Returns the statement count (|V| + |E|).
std::size_t export_cypher(const KnowledgeGraph& g, const std::string& path);
// Cypher string literal with escapes.
std::string cypher_string(std::string_view s);

// One JSON object per line, newline-terminated.
std::string dataset_to_jsonl(const std::vector<QARecord>& records);
// Throws FormatError with the 1-based line.
std::vector<QARecord> dataset_from_jsonl(std::string_view text);
void write_dataset(const std::vector<QARecord>& records, const std::string& path);
std::vector<QARecord> read_dataset(const std::string& path);

void write_traces(const std::vector<Trace>& traces, const std::string& path);
std::vector<Trace> read_traces(const std::string& path);

}  // namespace kgsynth

#endif  // KGSYNTH_STORAGE_H_
