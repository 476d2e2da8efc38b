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

#ifndef KGSYNTH_SAMPLING_H_
#define KGSYNTH_SAMPLING_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgsynth/graph.h"
#include "kgsynth/tasks.h"

namespace kgsynth {

// Undirected view of (part of) a knowledge graph used for sampling. Nodes are
// held in id order; adjacency lists are sorted by neighbour id. Parallel edges
// between one pair collapse to the first edge in (src, dst, kind) order.
class SamplingGraph {
 public:
  struct NodeInfo {
    NodeId id;
    NodeType type = NodeType::kEntity;
    // Entity fields visible to attribute filters: "type", "name", attrs.
    std::map<std::string, std::string> attributes;
    std::set<std::string> labels;
  };

  SamplingGraph() = default;
  SamplingGraph(std::vector<NodeInfo> nodes, const std::vector<Edge>& edges);

  // Keeps nodes of `types` and the edges among them. The pipeline samples over
  // everything but documents and assertions.
  static SamplingGraph from_graph(const KnowledgeGraph& g, const std::set<NodeType>& types);
  static SamplingGraph from_graph(const KnowledgeGraph& g);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const NodeInfo& node(std::size_t i) const { return nodes_[i]; }
  std::optional<std::size_t> index_of(const NodeId& id) const;

  struct Link {
    std::size_t to;
    std::size_t edge;  // index into edges()
  };
  const std::vector<Link>& neighbors(std::size_t i) const { return adj_[i]; }
  std::size_t degree(std::size_t i) const { return adj_[i].size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  // Edge joining i and j, if any.
  std::optional<std::size_t> edge_between(std::size_t i, std::size_t j) const;

  SamplingGraph induced(const std::vector<std::size_t>& keep) const;

 private:
  std::vector<NodeInfo> nodes_;
  std::map<NodeId, std::size_t> index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Link>> adj_;
};

bool passes_filters(const SamplingGraph::NodeInfo& n, const AttributeFilters& filters);

struct Subgraph {
  std::vector<NodeId> nodes;    // backbone first, then augmenting nodes
  std::vector<NodeId> backbone;
  std::vector<Edge> edges;      // induced
};

// Augmented chain sampling. Throws EmptyGraph, NoBackboneFound.
Subgraph augmented_chain_sample(const SamplingGraph& g, std::size_t k, std::uint64_t seed,
                                std::size_t retry_budget = 20);

struct Trace {
  std::vector<NodeId> path_nodes;
  std::vector<Edge> path_edges;
  std::vector<NodeId> augment_nodes;
  std::string task_name;
  std::size_t hop_num = 0;

  bool operator==(const Trace&) const = default;
};

nlohmann::ordered_json trace_to_json(const Trace& t);
Trace trace_from_json(const nlohmann::json& j);

struct TraceSearchLimits {
  // Start nodes tried before giving up.
  std::size_t max_starts = 20;
  // Node expansions per start.
  std::size_t expansion_budget = 200000;
};

// Randomized depth-first search for a path satisfying the task; see README
// for the exact acceptance rule. Throws NoValidTrace.
Trace generate_trace(const SamplingGraph& g, const TaskConfig& task, std::uint64_t seed,
                     const TraceSearchLimits& limits = {});

// Pieces of the acceptance rule, shared with tests.
bool is_valid_start(const SamplingGraph& g, std::size_t i, const TaskConfig& task);
bool is_valid_step(const SamplingGraph& g, std::size_t from, std::size_t to,
                   const TaskConfig& task);
// Augmenting nodes for a path: neighbours of path nodes in id order that pass
// the neighbour constraints and keep every type within its maximum, until
// the trace reaches max_nodes.
std::vector<std::size_t> augment_for_path(const SamplingGraph& g,
                                          const std::vector<std::size_t>& path,
                                          const TaskConfig& task);
std::map<NodeType, std::size_t> count_types(const SamplingGraph& g,
                                            const std::vector<std::size_t>& nodes);
bool window_satisfied(const TaskConfig& task, const std::map<NodeType, std::size_t>& counts);

}  // namespace kgsynth

#endif  // KGSYNTH_SAMPLING_H_
