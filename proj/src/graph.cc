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

#include "kgsynth/graph.h"

#include <algorithm>
#include <filesystem>

#include "kgsynth/errors.h"
#include "kgsynth/hash.h"
#include "kgsynth/text.h"

namespace kgsynth {

namespace {

struct KindInfo {
  EdgeKind kind;
  NodeType src;
  NodeType dst;
};

constexpr KindInfo kKindTable[kEdgeKindCount] = {
    {EdgeKind::kChkDoc, NodeType::kChunk, NodeType::kDocument},
    {EdgeKind::kChkFml, NodeType::kChunk, NodeType::kFormula},
    {EdgeKind::kChkImg, NodeType::kChunk, NodeType::kImage},
    {EdgeKind::kChkTbl, NodeType::kChunk, NodeType::kTable},
    {EdgeKind::kEntChk, NodeType::kEntity, NodeType::kChunk},
    {EdgeKind::kEntEnt, NodeType::kEntity, NodeType::kEntity},
    {EdgeKind::kEntFml, NodeType::kEntity, NodeType::kFormula},
    {EdgeKind::kEntImg, NodeType::kEntity, NodeType::kImage},
    {EdgeKind::kEntTbl, NodeType::kEntity, NodeType::kTable},
    {EdgeKind::kAssChk, NodeType::kAssertion, NodeType::kChunk},
    {EdgeKind::kAssFml, NodeType::kAssertion, NodeType::kFormula},
    {EdgeKind::kAssImg, NodeType::kAssertion, NodeType::kImage},
    {EdgeKind::kAssTbl, NodeType::kAssertion, NodeType::kTable},
    {EdgeKind::kFmlDoc, NodeType::kFormula, NodeType::kDocument},
    {EdgeKind::kImgDoc, NodeType::kImage, NodeType::kDocument},
    {EdgeKind::kTblDoc, NodeType::kTable, NodeType::kDocument},
};

const KindInfo& info(EdgeKind k) { return kKindTable[static_cast<int>(k)]; }

bool is_relative_locator(const std::string& p) {
  if (p.empty()) return false;
  std::filesystem::path path(p);
  if (path.is_absolute() || p.front() == '/') return false;
  for (const auto& part : path) {
    if (part == "..") return false;
  }
  return true;
}

template <class T>
void check_sources(const KnowledgeGraph& g, const T& n, std::string_view what) {
  if (n.src_id_list.empty()) {
    throw InvalidNode(std::string(what) + " '" + n.id.value +
                      "' has an empty src_id_list");
  }
  for (const NodeId& s : n.src_id_list) {
    if (!g.contains(s)) {
      throw InvalidNode(std::string(what) + " '" + n.id.value +
                        "' cites missing source '" + s.value + "'");
    }
  }
}

std::string primary_content(const Node& node) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DocumentNode>) {
          return n.path + "\x1f" + n.title;
        } else if constexpr (std::is_same_v<T, ChunkNode>) {
          return n.doc_id.value + "\x1f" + n.content;
        } else if constexpr (std::is_same_v<T, EntityNode>) {
          return n.name + "\x1f" + n.type_name;
        } else if constexpr (std::is_same_v<T, AssertionNode>) {
          return n.head.value + "\x1f" + n.relation + "\x1f" + n.tail.value;
        } else {
          return n.content + "\x1f" + n.caption + "\x1f" + n.path.value_or("");
        }
      },
      node);
}

}  // namespace

const std::array<EdgeKind, kEdgeKindCount> kAllEdgeKinds = [] {
  std::array<EdgeKind, kEdgeKindCount> out{};
  for (std::size_t i = 0; i < kEdgeKindCount; ++i) out[i] = kKindTable[i].kind;
  return out;
}();

std::string_view node_type_name(NodeType t) {
  switch (t) {
    case NodeType::kDocument: return "Document";
    case NodeType::kChunk: return "Chunk";
    case NodeType::kEntity: return "Entity";
    case NodeType::kAssertion: return "Assertion";
    case NodeType::kImage: return "Image";
    case NodeType::kTable: return "Table";
    case NodeType::kFormula: return "Formula";
  }
  return "?";
}

std::string_view node_type_abbrev(NodeType t) {
  switch (t) {
    case NodeType::kDocument: return "doc";
    case NodeType::kChunk: return "chk";
    case NodeType::kEntity: return "ent";
    case NodeType::kAssertion: return "ass";
    case NodeType::kImage: return "img";
    case NodeType::kTable: return "tbl";
    case NodeType::kFormula: return "fml";
  }
  return "?";
}

std::optional<NodeType> parse_node_type(std::string_view s) {
  std::string lower = ascii_lower(s);
  for (NodeType t : kAllNodeTypes) {
    if (lower == ascii_lower(node_type_name(t)) || lower == node_type_abbrev(t)) {
      return t;
    }
  }
  return std::nullopt;
}

NodeType node_type(const Node& n) {
  return std::visit([](const auto& x) { return std::decay_t<decltype(x)>::kType; }, n);
}

const NodeId& node_id(const Node& n) {
  return std::visit([](const auto& x) -> const NodeId& { return x.id; }, n);
}

NodeId& node_id(Node& n) {
  return std::visit([](auto& x) -> NodeId& { return x.id; }, n);
}

NodeType edge_source_type(EdgeKind k) { return info(k).src; }
NodeType edge_target_type(EdgeKind k) { return info(k).dst; }

std::string edge_kind_name(EdgeKind k) {
  return std::string(node_type_abbrev(info(k).src)) + "->" +
         std::string(node_type_abbrev(info(k).dst));
}

std::optional<EdgeKind> parse_edge_kind(std::string_view s) {
  for (EdgeKind k : kAllEdgeKinds) {
    if (edge_kind_name(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<EdgeKind> classify_edge(NodeType src, NodeType dst) {
  for (const KindInfo& k : kKindTable) {
    if (k.src == src && k.dst == dst) return k.kind;
  }
  return std::nullopt;
}

std::string edge_key(const Edge& e) {
  std::string key = e.src.value;
  key += '\x1f';
  key += e.dst.value;
  key += '\x1f';
  key += edge_kind_name(e.kind);
  if (e.assertion_id) {
    key += '\x1f';
    key += e.assertion_id->value;
  }
  return key;
}

NodeId make_node_id(NodeType type, std::initializer_list<std::string_view> content) {
  std::uint64_t h = fnv1a64(node_type_name(type));
  for (std::string_view c : content) {
    h = fnv1a64(c, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  }
  return NodeId(std::string(node_type_abbrev(type)) + ":" + to_hex(h));
}

// ---------------------------------------------------------------------------

const Node* KnowledgeGraph::find(const NodeId& id) const {
  auto it = nodes_.find(id.value);
  return it == nodes_.end() ? nullptr : &it->second;
}

const Node& KnowledgeGraph::at(const NodeId& id) const {
  const Node* n = find(id);
  if (!n) throw UnknownNode("no node '" + id.value + "'");
  return *n;
}

void KnowledgeGraph::check_node(const Node& node) const {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ChunkNode>) {
          if (n.content.empty()) {
            throw InvalidNode("chunk '" + n.id.value + "' has empty content");
          }
          if (!get<DocumentNode>(n.doc_id)) {
            throw InvalidNode("chunk '" + n.id.value + "' references missing document '" +
                              n.doc_id.value + "'");
          }
        } else if constexpr (std::is_same_v<T, EntityNode>) {
          if (n.name.empty()) {
            throw InvalidNode("entity '" + n.id.value + "' has an empty name");
          }
          check_sources(*this, n, "entity");
        } else if constexpr (std::is_same_v<T, AssertionNode>) {
          if (!get<EntityNode>(n.head)) {
            throw InvalidNode("assertion '" + n.id.value + "' head '" + n.head.value +
                              "' is not an entity");
          }
          if (!get<EntityNode>(n.tail)) {
            throw InvalidNode("assertion '" + n.id.value + "' tail '" + n.tail.value +
                              "' is not an entity");
          }
          if (n.relation.empty()) {
            throw InvalidNode("assertion '" + n.id.value + "' has an empty relation");
          }
          check_sources(*this, n, "assertion");
        } else if constexpr (!std::is_same_v<T, DocumentNode>) {
          if (n.content.empty()) {
            throw InvalidNode(std::string(node_type_name(T::kType)) + " '" + n.id.value +
                              "' has empty content");
          }
          if (n.path) {
            if (T::kType == NodeType::kFormula) {
              throw InvalidNode("formula '" + n.id.value + "' must not carry a path");
            }
            if (!is_relative_locator(*n.path)) {
              throw InvalidNode("'" + *n.path + "' is not a relative locator");
            }
          }
        }
      },
      node);
}

NodeId KnowledgeGraph::add_node(Node node) {
  NodeId& id = node_id(node);
  if (id.empty()) id = make_node_id(node_type(node), {primary_content(node)});
  if (nodes_.count(id.value) || retired_.count(id.value)) {
    throw DuplicateId("id '" + id.value + "' already used");
  }
  check_node(node);
  NodeId out = id;
  insert_unchecked(std::move(node));
  return out;
}

void KnowledgeGraph::insert_unchecked(Node node) {
  NodeId id = node_id(node);
  order_.push_back(id);
  nodes_.emplace(id.value, std::move(node));
}

Edge KnowledgeGraph::add_edge(const NodeId& src, const NodeId& dst, EdgeKind kind,
                              std::optional<NodeId> assertion_id) {
  const Node* s = find(src);
  const Node* d = find(dst);
  if (!s) throw UnknownNode("edge source '" + src.value + "' does not exist");
  if (!d) throw UnknownNode("edge target '" + dst.value + "' does not exist");
  NodeType st = node_type(*s), dt = node_type(*d);
  if (edge_source_type(kind) != st || edge_target_type(kind) != dt) {
    throw InvalidEdgeKind("(" + std::string(node_type_name(st)) + ", " +
                          std::string(node_type_name(dt)) + ") does not match " +
                          edge_kind_name(kind));
  }
  if (kind == EdgeKind::kEntEnt) {
    if (!assertion_id) {
      throw MissingAssertion("ent->ent edge " + src.value + " -> " + dst.value +
                             " needs an assertion id");
    }
    const auto* a = get<AssertionNode>(*assertion_id);
    if (!a) {
      throw MissingAssertion("assertion '" + assertion_id->value + "' does not exist");
    }
    if (a->head != src || a->tail != dst) {
      throw MissingAssertion("assertion '" + assertion_id->value +
                             "' does not join " + src.value + " -> " + dst.value);
    }
  } else if (assertion_id) {
    throw InvalidEdgeKind(edge_kind_name(kind) + " edges carry no assertion id");
  }
  Edge e{src, dst, kind, std::move(assertion_id)};
  auto it = edge_index_.find(edge_key(e));
  if (it != edge_index_.end()) return *edge_slots_[it->second];
  insert_edge_unchecked(e);
  return e;
}

void KnowledgeGraph::insert_edge_unchecked(Edge e) {
  std::string key = edge_key(e);
  if (edge_index_.count(key)) return;
  std::size_t slot = edge_slots_.size();
  out_[e.src.value].push_back(slot);
  in_[e.dst.value].push_back(slot);
  edge_index_.emplace(std::move(key), slot);
  edge_slots_.emplace_back(std::move(e));
}

bool KnowledgeGraph::remove_edge(const Edge& e) {
  auto it = edge_index_.find(edge_key(e));
  if (it == edge_index_.end()) return false;
  std::size_t slot = it->second;
  edge_index_.erase(it);
  std::erase(out_[e.src.value], slot);
  std::erase(in_[e.dst.value], slot);
  edge_slots_[slot].reset();
  return true;
}

void KnowledgeGraph::erase_node(const NodeId& id) {
  for (const Edge& e : out_edges(id)) remove_edge(e);
  for (const Edge& e : in_edges(id)) remove_edge(e);
  out_.erase(id.value);
  in_.erase(id.value);
  nodes_.erase(id.value);
  std::erase(order_, id);
  retired_.insert(id.value);
}

void KnowledgeGraph::remove_node(const NodeId& id) {
  const Node& n = at(id);
  NodeType t = node_type(n);
  if (t == NodeType::kAssertion) {
    // Drop the ent->ent projections that cite it, wherever they are.
    std::vector<Edge> cited;
    for (const Edge& e : edges()) {
      if (e.assertion_id && *e.assertion_id == id) cited.push_back(e);
    }
    for (const Edge& e : cited) remove_edge(e);
    erase_node(id);
    return;
  }
  if (t != NodeType::kEntity) {
    throw InvalidNode(std::string(node_type_name(t)) + " nodes cannot be removed");
  }
  std::vector<NodeId> assertions;
  for (const NodeId& other : order_) {
    if (const auto* a = get<AssertionNode>(other)) {
      if (a->head == id || a->tail == id) assertions.push_back(other);
    }
  }
  for (const NodeId& a : assertions) remove_node(a);
  erase_node(id);
}

std::vector<NodeId> KnowledgeGraph::node_ids_of(NodeType t) const {
  std::vector<NodeId> out;
  for (const NodeId& id : order_) {
    if (node_type(nodes_.at(id.value)) == t) out.push_back(id);
  }
  return out;
}

std::vector<Edge> KnowledgeGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_index_.size());
  for (const auto& slot : edge_slots_) {
    if (slot) out.push_back(*slot);
  }
  return out;
}

std::vector<Edge> KnowledgeGraph::out_edges(const NodeId& id) const {
  std::vector<Edge> out;
  auto it = out_.find(id.value);
  if (it != out_.end()) {
    for (std::size_t s : it->second) out.push_back(*edge_slots_[s]);
  }
  return out;
}

std::vector<Edge> KnowledgeGraph::in_edges(const NodeId& id) const {
  std::vector<Edge> out;
  auto it = in_.find(id.value);
  if (it != in_.end()) {
    for (std::size_t s : it->second) out.push_back(*edge_slots_[s]);
  }
  return out;
}

std::size_t KnowledgeGraph::out_degree(const NodeId& id) const {
  auto it = out_.find(id.value);
  return it == out_.end() ? 0 : it->second.size();
}

std::size_t KnowledgeGraph::in_degree(const NodeId& id) const {
  auto it = in_.find(id.value);
  return it == in_.end() ? 0 : it->second.size();
}

KnowledgeGraph KnowledgeGraph::from_parts(std::vector<Node> nodes, std::vector<Edge> edges) {
  KnowledgeGraph g;
  for (Node& n : nodes) {
    if (g.nodes_.count(node_id(n).value)) {
      throw DuplicateId("id '" + node_id(n).value + "' appears twice");
    }
    g.insert_unchecked(std::move(n));
  }
  for (Edge& e : edges) g.insert_edge_unchecked(std::move(e));
  return g;
}

bool KnowledgeGraph::operator==(const KnowledgeGraph& o) const {
  if (order_ != o.order_) return false;
  for (const NodeId& id : order_) {
    if (nodes_.at(id.value) != o.nodes_.at(id.value)) return false;
  }
  std::vector<Edge> a = edges(), b = o.edges();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

}  // namespace kgsynth
