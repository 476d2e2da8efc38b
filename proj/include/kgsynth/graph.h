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

#ifndef KGSYNTH_GRAPH_H_
#define KGSYNTH_GRAPH_H_

#include <array>
#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace kgsynth {

enum class NodeType { kDocument, kChunk, kEntity, kAssertion, kImage, kTable, kFormula };

inline constexpr std::array<NodeType, 7> kAllNodeTypes = {
    NodeType::kDocument, NodeType::kChunk,  NodeType::kEntity,
    NodeType::kAssertion, NodeType::kImage, NodeType::kTable,
    NodeType::kFormula};

// "Document", "Chunk", ... (also the Cypher label).
std::string_view node_type_name(NodeType t);
// "doc", "chk", "ent", "ass", "img", "tbl", "fml".
std::string_view node_type_abbrev(NodeType t);
// Accepts either spelling, case-insensitive for the long form.
std::optional<NodeType> parse_node_type(std::string_view s);

// Opaque identifier; stable across save/load.
struct NodeId {
  std::string value;

  NodeId() = default;
  explicit NodeId(std::string v) : value(std::move(v)) {}

  bool empty() const { return value.empty(); }
  auto operator<=>(const NodeId&) const = default;
};

// Standard node labels.
inline constexpr std::string_view kModalLabel = "modal";
inline constexpr std::string_view kDiscoveredLabel = "discovered";
inline constexpr std::string_view kTripletLabel = "triplet";

struct DocumentNode {
  static constexpr NodeType kType = NodeType::kDocument;
  NodeId id;
  std::string content;
  std::string title;
  std::string path;
  std::string schema;
  bool operator==(const DocumentNode&) const = default;
};

struct ChunkNode {
  static constexpr NodeType kType = NodeType::kChunk;
  NodeId id;
  std::string content;
  NodeId doc_id;
  bool operator==(const ChunkNode&) const = default;
};

struct EntityNode {
  static constexpr NodeType kType = NodeType::kEntity;
  NodeId id;
  std::string name;
  // Schema entity type; empty for untyped entities (e.g. from triplet files).
  std::string type_name;
  std::string desc;
  std::map<std::string, std::string> attr;
  std::vector<NodeId> src_id_list;
  std::set<std::string> labels;
  bool operator==(const EntityNode&) const = default;
};

struct AssertionNode {
  static constexpr NodeType kType = NodeType::kAssertion;
  NodeId id;
  NodeId head;
  std::string relation;
  NodeId tail;
  std::string desc;
  std::vector<NodeId> src_id_list;
  std::set<std::string> labels;
  bool operator==(const AssertionNode&) const = default;
};

// Image, Table and Formula share one field layout.
template <NodeType T>
struct ModalNode {
  static constexpr NodeType kType = T;
  NodeId id;
  // Image: formalized description or reference; Table: HTML; Formula: LaTeX.
  std::string content;
  std::string caption;
  // Asset locator relative to the corpus root. Always absent for formulas.
  std::optional<std::string> path;
  std::string desc;
  bool operator==(const ModalNode&) const = default;
};

using ImageNode = ModalNode<NodeType::kImage>;
using TableNode = ModalNode<NodeType::kTable>;
using FormulaNode = ModalNode<NodeType::kFormula>;

using Node = std::variant<DocumentNode, ChunkNode, EntityNode, AssertionNode,
                          ImageNode, TableNode, FormulaNode>;

NodeType node_type(const Node& n);
const NodeId& node_id(const Node& n);
NodeId& node_id(Node& n);

// The 16 permitted directed type pairs.
enum class EdgeKind {
  kChkDoc, kChkFml, kChkImg, kChkTbl,
  kEntChk, kEntEnt, kEntFml, kEntImg, kEntTbl,
  kAssChk, kAssFml, kAssImg, kAssTbl,
  kFmlDoc, kImgDoc, kTblDoc,
};

inline constexpr std::size_t kEdgeKindCount = 16;
extern const std::array<EdgeKind, kEdgeKindCount> kAllEdgeKinds;

NodeType edge_source_type(EdgeKind k);
NodeType edge_target_type(EdgeKind k);
// "chk->doc" style name used in files and exports.
std::string edge_kind_name(EdgeKind k);
std::optional<EdgeKind> parse_edge_kind(std::string_view s);
// The kind joining (src, dst), if that directed pair is one of the 16.
std::optional<EdgeKind> classify_edge(NodeType src, NodeType dst);

struct Edge {
  NodeId src;
  NodeId dst;
  EdgeKind kind;
  std::optional<NodeId> assertion_id;

  auto operator<=>(const Edge&) const = default;
};

std::string edge_key(const Edge& e);

// Deterministic content-derived id: "<abbrev>:<16 hex>".
NodeId make_node_id(NodeType type, std::initializer_list<std::string_view> content);

// Typed multimodal knowledge graph. Nodes keep insertion order, which fixes
// iteration order everywhere downstream. Single writer while building;
// read-only use afterwards is thread-safe.
class KnowledgeGraph {
 public:
  // Returns the node's id (generated from content when empty). Throws
  // DuplicateId or InvalidNode.
  NodeId add_node(Node node);

  // Throws UnknownNode, InvalidEdgeKind or MissingAssertion. Adding an edge
  // that already exists is a no-op returning the stored edge.
  Edge add_edge(const NodeId& src, const NodeId& dst, EdgeKind kind,
                std::optional<NodeId> assertion_id = std::nullopt);

  // Removes an Entity (cascading to its assertions) or an Assertion, with all
  // incident edges. Other node types cannot be removed; throws InvalidNode.
  void remove_node(const NodeId& id);
  bool remove_edge(const Edge& e);

  bool contains(const NodeId& id) const { return nodes_.count(id.value) > 0; }
  const Node* find(const NodeId& id) const;
  const Node& at(const NodeId& id) const;

  template <class T>
  const T* get(const NodeId& id) const {
    const Node* n = find(id);
    return n ? std::get_if<T>(n) : nullptr;
  }

  // Field-level mutation for the builder. The id must not be changed.
  template <class T>
  T* get_mutable(const NodeId& id) {
    auto it = nodes_.find(id.value);
    return it == nodes_.end() ? nullptr : std::get_if<T>(&it->second);
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edge_index_.size(); }
  bool empty() const { return nodes_.empty(); }

  // Ids in insertion order.
  const std::vector<NodeId>& node_ids() const { return order_; }
  std::vector<NodeId> node_ids_of(NodeType t) const;
  // Edges in insertion order.
  std::vector<Edge> edges() const;

  std::vector<Edge> out_edges(const NodeId& id) const;
  std::vector<Edge> in_edges(const NodeId& id) const;
  std::size_t out_degree(const NodeId& id) const;
  std::size_t in_degree(const NodeId& id) const;

  // Assemble a graph from stored parts without any invariant checks (used by
  // the loader; run validate_graph afterwards).
  static KnowledgeGraph from_parts(std::vector<Node> nodes, std::vector<Edge> edges);

  bool operator==(const KnowledgeGraph& o) const;

 private:
  void insert_unchecked(Node node);
  void insert_edge_unchecked(Edge e);
  void check_node(const Node& node) const;
  void erase_node(const NodeId& id);

  std::unordered_map<std::string, Node> nodes_;
  std::vector<NodeId> order_;
  std::unordered_set<std::string> retired_;
  std::vector<std::optional<Edge>> edge_slots_;
  std::unordered_map<std::string, std::size_t> edge_index_;
  std::unordered_map<std::string, std::vector<std::size_t>> out_;
  std::unordered_map<std::string, std::vector<std::size_t>> in_;
};

}  // namespace kgsynth

template <>
struct std::hash<kgsynth::NodeId> {
  std::size_t operator()(const kgsynth::NodeId& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};

#endif  // KGSYNTH_GRAPH_H_
