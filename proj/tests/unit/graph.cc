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

#include <algorithm>
#include <set>

#include "doctest.h"
#include "kgsynth/errors.h"
#include "kgsynth/graph.h"
#include "kgsynth/validate.h"
#include "testkit.h"

using namespace kgsynth;

namespace {

KnowledgeGraph small_graph() {
  KnowledgeGraph g;
  NodeId d = g.add_node(DocumentNode{NodeId("doc:a"), "body", "A", "a.json", ""});
  NodeId c = g.add_node(ChunkNode{NodeId("chk:a"), "Some text.", d});
  g.add_edge(c, d, EdgeKind::kChkDoc);
  EntityNode e1{NodeId("ent:1"), "Ada", "Person", "", {}, {c}, {}};
  EntityNode e2{NodeId("ent:2"), "Paris", "Place", "", {}, {c}, {}};
  g.add_node(e1);
  g.add_node(e2);
  g.add_node(AssertionNode{NodeId("ass:1"), e1.id, "lives_in", e2.id, "", {c}, {}});
  g.add_edge(e1.id, e2.id, EdgeKind::kEntEnt, NodeId("ass:1"));
  g.add_edge(e1.id, c, EdgeKind::kEntChk);
  return g;
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("type names round trip in both spellings") {
    for (NodeType t : kAllNodeTypes) {
      CHECK(parse_node_type(node_type_name(t)) == t);
      CHECK(parse_node_type(node_type_abbrev(t)) == t);
    }
    CHECK(parse_node_type("entity") == NodeType::kEntity);
    CHECK_FALSE(parse_node_type("Widget").has_value());
  }

  TEST_CASE("exactly sixteen edge kinds, each classifying its own pair") {
    std::set<std::pair<NodeType, NodeType>> pairs;
    for (EdgeKind k : kAllEdgeKinds) {
      CHECK(classify_edge(edge_source_type(k), edge_target_type(k)) == k);
      CHECK(parse_edge_kind(edge_kind_name(k)) == k);
      pairs.insert({edge_source_type(k), edge_target_type(k)});
    }
    CHECK(pairs.size() == 16);
    std::size_t legal = 0;
    for (NodeType a : kAllNodeTypes) {
      for (NodeType b : kAllNodeTypes) legal += classify_edge(a, b).has_value();
    }
    CHECK(legal == 16);
    CHECK(edge_kind_name(EdgeKind::kChkDoc) == "chk->doc");
    CHECK_FALSE(classify_edge(NodeType::kDocument, NodeType::kChunk).has_value());
    CHECK_FALSE(classify_edge(NodeType::kImage, NodeType::kTable).has_value());
  }

  TEST_CASE("node ids are content derived and prefixed") {
    NodeId a = make_node_id(NodeType::kChunk, {"hello"});
    NodeId b = make_node_id(NodeType::kChunk, {"hello"});
    NodeId c = make_node_id(NodeType::kChunk, {"hell", "o"});
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a.value.rfind("chk:", 0) == 0);
    CHECK(a.value.size() == 4 + 16);
  }

  TEST_CASE("add_node rejects duplicates and broken nodes") {
    KnowledgeGraph g = small_graph();
    CHECK_THROWS_AS(g.add_node(DocumentNode{NodeId("doc:a"), "", "", "", ""}), DuplicateId);
    CHECK_THROWS_AS(g.add_node(ChunkNode{NodeId("chk:x"), "", NodeId("doc:a")}), InvalidNode);
    CHECK_THROWS_AS(g.add_node(ChunkNode{NodeId("chk:y"), "t", NodeId("doc:nope")}), InvalidNode);
    CHECK_THROWS_AS(g.add_node(EntityNode{NodeId("ent:x"), "", "", "", {}, {NodeId("chk:a")}, {}}),
                    InvalidNode);
    CHECK_THROWS_AS(g.add_node(EntityNode{NodeId("ent:y"), "Y", "", "", {}, {}, {}}), InvalidNode);
    CHECK_THROWS_AS(
        g.add_node(EntityNode{NodeId("ent:z"), "Z", "", "", {}, {NodeId("chk:ghost")}, {}}),
        InvalidNode);
    CHECK_THROWS_AS(g.add_node(FormulaNode{NodeId("fml:x"), "x", "", "f.png", ""}), InvalidNode);
    CHECK_THROWS_AS(g.add_node(ImageNode{NodeId("img:x"), "x", "", "/abs.png", ""}), InvalidNode);
    CHECK_THROWS_AS(g.add_node(ImageNode{NodeId("img:y"), "x", "", "../up.png", ""}), InvalidNode);
    CHECK_THROWS_AS(g.add_node(AssertionNode{NodeId("ass:x"), NodeId("ent:1"), "r",
                                             NodeId("chk:a"), "", {NodeId("chk:a")}, {}}),
                    InvalidNode);
    CHECK(g.add_node(ImageNode{NodeId("img:ok"), "x", "", "sub/dir.png", ""}).value == "img:ok");
  }

  TEST_CASE("add_edge enforces the kind table and assertion links") {
    KnowledgeGraph g = small_graph();
    CHECK_THROWS_AS(g.add_edge(NodeId("doc:a"), NodeId("chk:a"), EdgeKind::kChkDoc), InvalidEdgeKind);
    CHECK_THROWS_AS(g.add_edge(NodeId("chk:a"), NodeId("doc:a"), EdgeKind::kEntChk), InvalidEdgeKind);
    CHECK_THROWS_AS(g.add_edge(NodeId("chk:a"), NodeId("doc:zzz"), EdgeKind::kChkDoc), UnknownNode);
    CHECK_THROWS_AS(g.add_edge(NodeId("ent:2"), NodeId("ent:1"), EdgeKind::kEntEnt), MissingAssertion);
    CHECK_THROWS_AS(g.add_edge(NodeId("ent:2"), NodeId("ent:1"), EdgeKind::kEntEnt, NodeId("ass:1")),
                    MissingAssertion);
    CHECK_THROWS_AS(g.add_edge(NodeId("ent:1"), NodeId("chk:a"), EdgeKind::kEntChk, NodeId("ass:1")),
                    InvalidEdgeKind);
    std::size_t before = g.edge_count();
    g.add_edge(NodeId("chk:a"), NodeId("doc:a"), EdgeKind::kChkDoc);
    CHECK(g.edge_count() == before);
  }

  TEST_CASE("adjacency and insertion order") {
    KnowledgeGraph g = small_graph();
    CHECK(g.node_count() == 5);
    CHECK(g.edge_count() == 3);
    CHECK(g.node_ids().front().value == "doc:a");
    CHECK(g.node_ids_of(NodeType::kEntity).size() == 2);
    CHECK(g.out_degree(NodeId("ent:1")) == 2);
    CHECK(g.in_degree(NodeId("chk:a")) == 1);
    CHECK(g.in_edges(NodeId("ent:2")).at(0).assertion_id == NodeId("ass:1"));
    CHECK(g.get<EntityNode>(NodeId("ent:1"))->name == "Ada");
    CHECK(g.get<ChunkNode>(NodeId("ent:1")) == nullptr);
    CHECK_THROWS_AS(g.at(NodeId("nope")), UnknownNode);
  }

  TEST_CASE("removing an entity cascades to its assertions and edges") {
    KnowledgeGraph g = small_graph();
    g.remove_node(NodeId("ent:2"));
    CHECK_FALSE(g.contains(NodeId("ent:2")));
    CHECK_FALSE(g.contains(NodeId("ass:1")));
    CHECK(g.edge_count() == 2);
    CHECK(validate_graph(g).empty());
    CHECK_THROWS_AS(g.remove_node(NodeId("chk:a")), InvalidNode);
    // Retired ids are not reused.
    CHECK_THROWS_AS(g.add_node(EntityNode{NodeId("ent:2"), "P", "", "", {}, {NodeId("chk:a")}, {}}),
                    DuplicateId);
  }

  TEST_CASE("equality ignores edge insertion order") {
    Rng rng(3);
    KnowledgeGraph g = testkit::random_knowledge_graph(rng);
    std::vector<Node> nodes;
    for (const NodeId& id : g.node_ids()) nodes.push_back(g.at(id));
    std::vector<Edge> edges = g.edges();
    std::reverse(edges.begin(), edges.end());
    CHECK(KnowledgeGraph::from_parts(nodes, edges) == g);
    edges.pop_back();
    CHECK_FALSE(KnowledgeGraph::from_parts(nodes, edges) == g);
  }
}

TEST_SUITE("validate") {
  TEST_CASE("random valid graphs have no violations") {
    for (std::uint64_t s = 0; s < 50; ++s) {
      Rng rng(s);
      CHECK(validate_graph(testkit::random_knowledge_graph(rng)).empty());
    }
  }

  TEST_CASE("loader-assembled graphs report every broken rule") {
    KnowledgeGraph g = small_graph();
    std::vector<Node> nodes;
    for (const NodeId& id : g.node_ids()) nodes.push_back(g.at(id));
    std::vector<Edge> edges = g.edges();
    // Drop the assertion's projection, add a mislabelled and a dangling edge.
    std::erase_if(edges, [](const Edge& e) { return e.kind == EdgeKind::kEntEnt; });
    edges.push_back({NodeId("ent:2"), NodeId("doc:a"), EdgeKind::kChkDoc, std::nullopt});
    edges.push_back({NodeId("ent:1"), NodeId("chk:gone"), EdgeKind::kEntChk, std::nullopt});
    nodes.push_back(ChunkNode{NodeId("chk:orphan"), "x", NodeId("doc:missing")});
    ValidationReport v = validate_graph(KnowledgeGraph::from_parts(nodes, edges));
    std::set<std::string> rules;
    for (const auto& x : v) rules.insert(x.rule);
    CHECK(rules.count("assertion.projection"));
    CHECK(rules.count("edge.kind"));
    CHECK(rules.count("edge.endpoint"));
    CHECK(rules.count("chunk.doc_id"));
    // Deterministic.
    CHECK(v == validate_graph(KnowledgeGraph::from_parts(nodes, edges)));
  }
}
