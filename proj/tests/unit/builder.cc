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
#include <memory>
#include <string>

#include "doctest.h"
#include "kgsynth/builder.h"
#include "kgsynth/errors.h"
#include "kgsynth/text.h"
#include "kgsynth/validate.h"
#include "testkit.h"

using namespace kgsynth;

namespace {

Schema mini_schema() {
  return Schema::parse(R"({
    "name": "mini",
    "entity_types": [
      {"type_name": "Person", "description": "a person", "attribute_keys": [], "fuzzified_placeholder": "someone"},
      {"type_name": "Place", "description": "a place", "attribute_keys": [], "fuzzified_placeholder": "somewhere"}
    ],
    "relation_types": [
      {"relation_name": "lives_in", "allowed_head_types": ["Person"], "allowed_tail_types": ["Place"], "description": ""}
    ]
  })");
}

ParsedDocument mini_doc() {
  ParsedDocument d;
  d.title = "Notes";
  d.source_path = "notes.pdf";
  d.schema = "mini";
  d.blocks.push_back({BlockKind::kText, "Ada Lovelace lived in London. Table 1 lists her notes.",
                      std::nullopt, 0, std::nullopt});
  d.blocks.push_back({BlockKind::kTable, "<table><tr><td>x</td></tr></table>",
                      std::string("Table 1: notes"), 0, std::nullopt});
  d.blocks.push_back({BlockKind::kFormula, "a^2+b^2=c^2 \\tag{3}", std::nullopt, 0,
                      std::nullopt});
  return d;
}

// Replies keyed on the prompt header.
std::string mini_reply(const std::string& prompt) {
  if (contains(prompt, "[Table Description]")) return "a table of notes";
  if (contains(prompt, "[Formula Description]")) return "the Pythagorean relation";
  if (contains(prompt, "[Entity and Relation Extraction]")) {
    return R"(Sure: {"entities": [
      {"name": "Ada Lovelace", "type": "Person", "desc": "mathematician"},
      {"name": "London", "type": "Place", "desc": "city"},
      {"name": "Engine", "type": "Machine", "desc": "not in schema"}],
     "assertions": [
      {"head": "Ada Lovelace", "relation": "lives_in", "tail": "London", "desc": "lived"},
      {"head": "London", "relation": "lives_in", "tail": "Ada Lovelace", "desc": "wrong way"},
      {"head": "Ada Lovelace", "relation": "lives_in", "tail": "Nowhere", "desc": "dangling"}]})";
  }
  if (contains(prompt, "[Modal Element Extraction]") && contains(prompt, "<table>")) {
    return R"({"entities": [{"name": "Ada Lovelace", "type": "Person", "desc": "author"}],
               "assertions": []})";
  }
  return "this is not json";
}

Gateway scripted_gateway(std::shared_ptr<testkit::ScriptedProvider> p) {
  Gateway gw;
  gw.chat = testkit::pool_of(p);
  gw.embedding = gw.chat;
  gw.workers = 2;
  return gw;
}

std::vector<NodeId> entities_named(const KnowledgeGraph& g, const std::string& name) {
  std::vector<NodeId> out;
  for (const NodeId& id : g.node_ids_of(NodeType::kEntity)) {
    if (g.get<EntityNode>(id)->name == name) out.push_back(id);
  }
  return out;
}

}  // namespace

TEST_SUITE("builder") {

TEST_CASE("element references and labels") {
  auto refs = find_element_references("See Table 2 and Fig. 3, then Equation 7 and 图 4.");
  CHECK(refs == std::vector<std::string>{"table:2", "image:3", "formula:7", "image:4"});
  CHECK(find_element_references("no references here").empty());

  CHECK(element_label(BlockKind::kTable, "Table 5: results", "") == std::optional<std::string>("table:5"));
  CHECK(element_label(BlockKind::kImage, "Figure 12. A cat", "") == std::optional<std::string>("image:12"));
  CHECK(element_label(BlockKind::kFormula, "", "E=mc^2 \\tag{4}") == std::optional<std::string>("formula:4"));
  CHECK(element_label(BlockKind::kFormula, "(9)", "x") == std::optional<std::string>("formula:9"));
  CHECK_FALSE(element_label(BlockKind::kTable, "results", "").has_value());
  CHECK_FALSE(element_label(BlockKind::kText, "Table 1", "").has_value());
}

TEST_CASE("stage 1 builds the document skeleton") {
  auto p = std::make_shared<testkit::ScriptedProvider>("m", mini_reply);
  Gateway gw = scripted_gateway(p);
  BuildReport rep;
  KnowledgeGraph g = build_stage1({mini_doc()}, {}, mini_schema(), gw, BuilderOptions{}, rep);

  CHECK(g.node_ids_of(NodeType::kDocument).size() == 1);
  auto chunks = g.node_ids_of(NodeType::kChunk);
  REQUIRE(chunks.size() == 1);
  auto tables = g.node_ids_of(NodeType::kTable);
  auto formulas = g.node_ids_of(NodeType::kFormula);
  REQUIRE(tables.size() == 1);
  REQUIRE(formulas.size() == 1);
  CHECK(g.get<TableNode>(tables[0])->desc == "a table of notes");
  CHECK(g.get<TableNode>(tables[0])->caption == "Table 1: notes");
  CHECK(g.get<FormulaNode>(formulas[0])->desc == "the Pythagorean relation");
  CHECK_FALSE(g.get<FormulaNode>(formulas[0])->path.has_value());
  // The chunk cites the table by caption number.
  auto out = g.out_edges(chunks[0]);
  CHECK(std::any_of(out.begin(), out.end(), [&](const Edge& e) {
    return e.dst == tables[0] && e.kind == EdgeKind::kChkTbl;
  }));
  CHECK(validate_graph(g).empty());
  CHECK(g.node_ids_of(NodeType::kEntity).empty());
}

TEST_CASE("stage 1 rejects a document naming another schema") {
  auto p = std::make_shared<testkit::ScriptedProvider>("m", mini_reply);
  ParsedDocument d = mini_doc();
  d.schema = "other";
  BuildReport rep;
  CHECK_THROWS_AS(build_stage1({d}, {}, mini_schema(), scripted_gateway(p), BuilderOptions{}, rep),
                  SchemaUnknown);
}

TEST_CASE("stage 1 triplets are untyped and labelled") {
  auto p = std::make_shared<testkit::ScriptedProvider>("m", mini_reply);
  TripletSource src{"kb.tsv", {{"A", "lives_in", "B", std::nullopt},
                               {"A", "likes", "C", std::string("fond")},
                               {"D", "likes", "D", std::nullopt}}};
  BuildReport rep;
  KnowledgeGraph g = build_stage1({}, {src}, mini_schema(), scripted_gateway(p), BuilderOptions{}, rep);
  auto docs = g.node_ids_of(NodeType::kDocument);
  REQUIRE(docs.size() == 1);
  CHECK(g.node_ids_of(NodeType::kEntity).size() == 4);
  for (const NodeId& id : g.node_ids_of(NodeType::kEntity)) {
    const EntityNode* e = g.get<EntityNode>(id);
    CHECK(e->type_name.empty());
    CHECK(e->labels.count(std::string(kTripletLabel)) == 1);
    CHECK(e->src_id_list == std::vector<NodeId>{docs[0]});
  }
  auto asserts = g.node_ids_of(NodeType::kAssertion);
  REQUIRE(asserts.size() == 2);
  for (const NodeId& id : asserts) {
    const AssertionNode* a = g.get<AssertionNode>(id);
    bool discovered = a->labels.count(std::string(kDiscoveredLabel)) == 1;
    CHECK(discovered == (a->relation == "likes"));
  }
  CHECK(rep.dropped_relation == 1);
  CHECK(validate_graph(g).empty());
}

TEST_CASE("stage 2 extraction, drops and parse failures") {
  auto p = std::make_shared<testkit::ScriptedProvider>("m", mini_reply);
  Gateway gw = scripted_gateway(p);
  BuilderOptions opt;
  opt.extraction_retries = 1;
  BuildReport rep;
  KnowledgeGraph g = build_stage1({mini_doc()}, {}, mini_schema(), gw, opt, rep);
  std::size_t before = p->calls();
  g = build_stage2(std::move(g), mini_schema(), gw, opt, rep);
  // chunk + table answer on the first try; the formula fails twice.
  CHECK(p->calls() - before == 4);
  CHECK(rep.extraction_parse_failures == 1);
  CHECK(rep.dropped_unknown_type == 1);
  CHECK(rep.dropped_relation == 1);
  CHECK(rep.dropped_dangling == 1);

  auto ada = entities_named(g, "Ada Lovelace");
  REQUIRE(ada.size() == 1);
  const EntityNode* e = g.get<EntityNode>(ada[0]);
  CHECK(e->type_name == "Person");
  CHECK(e->src_id_list.size() == 2);
  CHECK(e->labels.count(std::string(kModalLabel)) == 1);
  auto london = entities_named(g, "London");
  REQUIRE(london.size() == 1);
  CHECK(g.get<EntityNode>(london[0])->labels.count(std::string(kModalLabel)) == 0);
  REQUIRE(g.node_ids_of(NodeType::kAssertion).size() == 1);
  const AssertionNode* a = g.get<AssertionNode>(g.node_ids_of(NodeType::kAssertion)[0]);
  CHECK(a->head == ada[0]);
  CHECK(a->tail == london[0]);
  CHECK(validate_graph(g).empty());
}

TEST_CASE("merge keeps the first member's slot and all sources") {
  KnowledgeGraph g;
  NodeId doc = g.add_node(DocumentNode{NodeId(), "text", "t", "p", "mini"});
  NodeId c1 = g.add_node(ChunkNode{NodeId(), "one", doc});
  NodeId c2 = g.add_node(ChunkNode{NodeId(), "two", doc});
  g.add_edge(c1, doc, EdgeKind::kChkDoc);
  g.add_edge(c2, doc, EdgeKind::kChkDoc);
  auto ent = [&](const std::string& name, NodeId src) {
    EntityNode e;
    e.name = name;
    e.type_name = "Person";
    e.src_id_list = {src};
    NodeId id = g.add_node(e);
    g.add_edge(id, src, EdgeKind::kEntChk);
    return id;
  };
  NodeId a = ent("Ada", c1), b = ent("Ada L.", c2), z = ent("Zed", c1);
  auto rel = [&](NodeId h, NodeId t, NodeId src) {
    AssertionNode as;
    as.head = h;
    as.relation = "knows";
    as.tail = t;
    as.src_id_list = {src};
    NodeId id = g.add_node(as);
    g.add_edge(h, t, EdgeKind::kEntEnt, id);
    g.add_edge(id, src, EdgeKind::kAssChk);
    return id;
  };
  rel(a, z, c1);
  rel(b, z, c2);
  rel(a, b, c1);
  REQUIRE(validate_graph(g).empty());

  BuildReport rep;
  KnowledgeGraph m = merge_entities(g, {MergeGroup{{a, b}}}, rep);
  CHECK(rep.merged_entities == 1);
  CHECK(rep.collapsed_assertions == 1);
  auto ents = m.node_ids_of(NodeType::kEntity);
  REQUIRE(ents.size() == 2);
  const EntityNode* s = m.get<EntityNode>(ents[0]);
  CHECK(s->src_id_list.size() == 2);
  CHECK(m.get<EntityNode>(ents[1])->name == "Zed");
  // The two knows-Zed assertions coincide and union their sources.
  auto asserts = m.node_ids_of(NodeType::kAssertion);
  REQUIRE(asserts.size() == 1);
  auto srcs = m.get<AssertionNode>(asserts[0])->src_id_list;
  std::sort(srcs.begin(), srcs.end());
  std::vector<NodeId> want{c1, c2};
  std::sort(want.begin(), want.end());
  CHECK(srcs == want);
  CHECK(validate_graph(m).empty());
}

TEST_CASE("rename relations") {
  auto p = std::make_shared<testkit::ScriptedProvider>("m", mini_reply);
  TripletSource src{"kb.tsv", {{"A", "resides_in", "B", std::nullopt},
                               {"A", "lives_in", "B", std::nullopt},
                               {"C", "resides_in", "B", std::nullopt}}};
  BuildReport rep;
  KnowledgeGraph g = build_stage1({}, {src}, mini_schema(), scripted_gateway(p), BuilderOptions{}, rep);
  KnowledgeGraph r = rename_relations(g, {{"resides_in", "lives_in"}}, rep);
  CHECK(rep.merged_relations >= 1);
  auto asserts = r.node_ids_of(NodeType::kAssertion);
  CHECK(asserts.size() == 2);
  for (const NodeId& id : asserts) CHECK(r.get<AssertionNode>(id)->relation == "lives_in");
  CHECK(validate_graph(r).empty());
}

TEST_CASE("report json carries every counter") {
  BuildReport rep;
  rep.merged_entities = 3;
  rep.stage_violations = {0, 1, 0, 2};
  auto j = rep.to_json();
  CHECK(j["merged_entities"] == 3);
  CHECK(j.contains("extraction_parse_failures"));
  CHECK(j.contains("pruned_assertions"));
}

}  // TEST_SUITE
