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

#include "kgsynth/validate.h"

#include <filesystem>
#include <set>

namespace kgsynth {

namespace {

class Checker {
 public:
  explicit Checker(const KnowledgeGraph& g) : g_(g) {}

  ValidationReport run() {
    for (const NodeId& id : g_.node_ids()) {
      std::visit([&](const auto& n) { check(n); }, g_.at(id));
    }
    for (const Edge& e : g_.edges()) check_edge(e);
    return std::move(report_);
  }

 private:
  void add(const NodeId& id, std::string rule, std::string message) {
    report_.push_back({id.value, std::move(rule), std::move(message)});
  }

  template <class T>
  void check_sources(const T& n, const std::string& prefix) {
    if (n.src_id_list.empty()) {
      add(n.id, prefix + ".src_id_list", "empty provenance list");
    }
    for (const NodeId& s : n.src_id_list) {
      if (!g_.contains(s)) {
        add(n.id, prefix + ".src_id_list", "source '" + s.value + "' is missing");
      }
    }
  }

  void check(const DocumentNode&) {}

  void check(const ChunkNode& n) {
    if (n.content.empty()) add(n.id, "chunk.content", "empty content");
    if (!g_.get<DocumentNode>(n.doc_id)) {
      add(n.id, "chunk.doc_id", "document '" + n.doc_id.value + "' does not resolve");
    }
  }

  void check(const EntityNode& n) {
    if (n.name.empty()) add(n.id, "entity.name", "empty name");
    check_sources(n, "entity");
  }

  void check(const AssertionNode& n) {
    bool head_ok = g_.get<EntityNode>(n.head) != nullptr;
    bool tail_ok = g_.get<EntityNode>(n.tail) != nullptr;
    if (!head_ok) add(n.id, "assertion.head", "head '" + n.head.value + "' is not an entity");
    if (!tail_ok) add(n.id, "assertion.tail", "tail '" + n.tail.value + "' is not an entity");
    if (n.relation.empty()) add(n.id, "assertion.relation", "empty relation");
    check_sources(n, "assertion");
    if (head_ok && tail_ok) {
      Edge projection{n.head, n.tail, EdgeKind::kEntEnt, n.id};
      bool found = false;
      for (const Edge& e : g_.out_edges(n.head)) {
        if (e == projection) {
          found = true;
          break;
        }
      }
      if (!found) add(n.id, "assertion.projection", "missing ent->ent edge");
    }
  }

  template <NodeType T>
  void check(const ModalNode<T>& n) {
    std::string prefix = std::string(node_type_abbrev(T));
    if (n.content.empty()) add(n.id, prefix + ".content", "empty content");
    if (n.path) {
      std::filesystem::path p(*n.path);
      bool bad = n.path->empty() || p.is_absolute() || n.path->front() == '/';
      for (const auto& part : p) bad = bad || part == "..";
      if (T == NodeType::kFormula) {
        add(n.id, prefix + ".path", "formulas carry no asset path");
      } else if (bad) {
        add(n.id, prefix + ".path", "'" + *n.path + "' is not a relative locator");
      }
    }
  }

  void check_edge(const Edge& e) {
    const Node* s = g_.find(e.src);
    const Node* d = g_.find(e.dst);
    if (!s || !d) {
      add(e.src, "edge.endpoint",
          edge_kind_name(e.kind) + " edge to '" + e.dst.value + "' has a missing endpoint");
      return;
    }
    if (node_type(*s) != edge_source_type(e.kind) ||
        node_type(*d) != edge_target_type(e.kind)) {
      add(e.src, "edge.kind",
          "(" + std::string(node_type_name(node_type(*s))) + ", " +
              std::string(node_type_name(node_type(*d))) + ") labelled " +
              edge_kind_name(e.kind));
    }
    if (e.kind == EdgeKind::kEntEnt) {
      const AssertionNode* a = e.assertion_id ? g_.get<AssertionNode>(*e.assertion_id) : nullptr;
      if (!a) {
        add(e.src, "edge.assertion", "ent->ent edge to '" + e.dst.value +
                                         "' lacks a resolvable assertion");
      } else if (a->head != e.src || a->tail != e.dst) {
        add(e.src, "edge.assertion",
            "assertion '" + a->id.value + "' does not join this edge's endpoints");
      }
    } else if (e.assertion_id) {
      add(e.src, "edge.assertion", edge_kind_name(e.kind) + " edge carries an assertion id");
    }
  }

  const KnowledgeGraph& g_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate_graph(const KnowledgeGraph& graph) {
  return Checker(graph).run();
}

}  // namespace kgsynth
