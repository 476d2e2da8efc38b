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

#include "kgsynth/builder.h"

#include <algorithm>
#include <filesystem>
#include <regex>
#include <set>
#include <tuple>
#include <unordered_map>

#include "kgsynth/embedding.h"
#include "kgsynth/errors.h"
#include "kgsynth/parallel.h"
#include "kgsynth/text.h"
#include "kgsynth/validate.h"

namespace kgsynth {

using nlohmann::json;

nlohmann::ordered_json BuildReport::to_json() const {
  nlohmann::ordered_json j;
  j["extraction_parse_failures"] = extraction_parse_failures;
  j["dropped_unknown_type"] = dropped_unknown_type;
  j["dropped_relation"] = dropped_relation;
  j["dropped_dangling"] = dropped_dangling;
  j["discovery_parse_failures"] = discovery_parse_failures;
  j["recall_rejected"] = recall_rejected;
  j["discovered_entities"] = discovered_entities;
  j["discovered_assertions"] = discovered_assertions;
  j["grouping_parse_failures"] = grouping_parse_failures;
  j["merged_entities"] = merged_entities;
  j["merged_relations"] = merged_relations;
  j["collapsed_assertions"] = collapsed_assertions;
  j["pruned_entities"] = pruned_entities;
  j["pruned_assertions"] = pruned_assertions;
  j["stage_violations"] = stage_violations;
  return j;
}

// ---------------------------------------------------------------------------
// Reference detection.

namespace {

const std::regex& reference_regex() {
  static const std::regex re(
      R"((Figure|Fig\.|Table|Equation|Eqn\.|Eq\.|Formula|图|表|公式)\s*\(?\s*([0-9]+(?:\.[0-9]+)*))",
      std::regex::icase);
  return re;
}

std::string reference_kind(std::string word) {
  word = ascii_lower(word);
  if (word == "figure" || word == "fig." || word == "图") return "image";
  if (word == "table" || word == "表") return "table";
  return "formula";
}

std::string kind_key(BlockKind k) {
  switch (k) {
    case BlockKind::kImage: return "image";
    case BlockKind::kTable: return "table";
    case BlockKind::kFormula: return "formula";
    case BlockKind::kText: break;
  }
  return "text";
}

}  // namespace

std::vector<std::string> find_element_references(std::string_view text) {
  std::vector<std::string> out;
  std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), reference_regex());
       it != std::sregex_iterator(); ++it) {
    std::string key = reference_kind((*it)[1].str()) + ":" + (*it)[2].str();
    if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(key);
  }
  return out;
}

std::optional<std::string> element_label(BlockKind kind, std::string_view caption,
                                         std::string_view content) {
  const std::string want = kind_key(kind);
  std::string cap(caption);
  std::smatch m;
  if (std::regex_search(cap, m, reference_regex()) && reference_kind(m[1].str()) == want) {
    return want + ":" + m[2].str();
  }
  if (kind == BlockKind::kFormula) {
    static const std::regex tag(R"(\\tag\{\s*([0-9]+(?:\.[0-9]+)*)\s*\})");
    static const std::regex bare(R"(^\s*\(\s*([0-9]+(?:\.[0-9]+)*)\s*\)\s*$)");
    std::string body(content);
    if (std::regex_search(body, m, tag)) return want + ":" + m[1].str();
    if (std::regex_search(cap, m, bare)) return want + ":" + m[1].str();
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Shared helpers.

namespace {

std::string describe_entity_types(const Schema& schema) {
  std::string out;
  for (const EntityType& t : schema.entity_types) {
    out += "- " + t.type_name + ": " + t.description;
    if (!t.attribute_keys.empty()) out += "; attributes: " + join(t.attribute_keys, ", ");
    out += "\n";
  }
  return out.empty() ? "(none)\n" : out;
}

std::string describe_relation_types(const Schema& schema) {
  std::string out;
  for (const RelationType& r : schema.relation_types) {
    out += "- " + r.relation_name + ": " +
           (r.allowed_head_types.empty() ? "any" : join(r.allowed_head_types, "|")) + " -> " +
           (r.allowed_tail_types.empty() ? "any" : join(r.allowed_tail_types, "|"));
    if (!r.description.empty()) out += "; " + r.description;
    out += "\n";
  }
  return out.empty() ? "(none)\n" : out;
}

std::optional<json> parse_object(std::string_view reply) {
  auto body = extract_balanced_object(reply);
  if (!body) return std::nullopt;
  json j = json::parse(*body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

// Asks for a structured reply; re-asks up to `retries` times while the reply
// fails `valid`. Gateway errors propagate.
template <class Valid>
std::optional<json> ask_structured(const EndpointPool& pool, const std::string& prompt,
                                   double temperature, int retries, Valid&& valid) {
  for (int attempt = 0; attempt <= std::max(0, retries); ++attempt) {
    ChatResponse r = pool.chat(user_request(prompt, temperature, true));
    auto j = parse_object(r.text);
    if (j && valid(*j)) return j;
  }
  return std::nullopt;
}

std::string string_or_empty(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return {};
  return std::string(trim(it->get<std::string>()));
}

struct ExtractedEntity {
  std::string name;
  std::string type;
  std::string desc;
  std::map<std::string, std::string> attrs;
};

struct ExtractedAssertion {
  std::string head;
  std::string relation;
  std::string tail;
  std::string desc;
};

struct Extraction {
  std::vector<ExtractedEntity> entities;
  std::vector<ExtractedAssertion> assertions;
};

bool valid_assertion_list(const json& j, const char* key) {
  if (!j.contains(key)) return true;
  if (!j[key].is_array()) return false;
  for (const json& a : j[key]) {
    if (!a.is_object()) return false;
    for (const char* f : {"head", "relation", "tail"}) {
      if (!a.contains(f) || !a[f].is_string()) return false;
    }
  }
  return true;
}

bool valid_extraction(const json& j) {
  if (!j.contains("entities") || !j["entities"].is_array()) return false;
  for (const json& e : j["entities"]) {
    if (!e.is_object() || !e.contains("name") || !e["name"].is_string()) return false;
    if (e.contains("attrs") && !e["attrs"].is_object() && !e["attrs"].is_null()) return false;
  }
  return valid_assertion_list(j, "assertions");
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  return v.dump();
}

std::vector<ExtractedAssertion> read_assertions(const json& j, const char* key) {
  std::vector<ExtractedAssertion> out;
  if (!j.contains(key)) return out;
  for (const json& a : j[key]) {
    out.push_back({string_or_empty(a, "head"), string_or_empty(a, "relation"),
                   string_or_empty(a, "tail"), string_or_empty(a, "desc")});
  }
  return out;
}

Extraction read_extraction(const json& j) {
  Extraction x;
  for (const json& e : j["entities"]) {
    ExtractedEntity ent{string_or_empty(e, "name"), string_or_empty(e, "type"),
                        string_or_empty(e, "desc"), {}};
    if (e.contains("attrs") && e["attrs"].is_object()) {
      for (const auto& [k, v] : e["attrs"].items()) ent.attrs[k] = scalar_text(v);
    }
    x.entities.push_back(std::move(ent));
  }
  x.assertions = read_assertions(j, "assertions");
  return x;
}

// Entity lookup by (name, type) with fallback to an untyped entity of the same
// name, and by bare name for assertion endpoints.
class EntityIndex {
 public:
  explicit EntityIndex(const KnowledgeGraph& g) {
    for (const NodeId& id : g.node_ids_of(NodeType::kEntity)) add(*g.get<EntityNode>(id));
  }

  void add(const EntityNode& e) {
    by_key_[{e.name, e.type_name}] = e.id;
    by_name_.emplace(e.name, e.id);
  }

  void retype(const EntityNode& e, const std::string& old_type) {
    by_key_.erase({e.name, old_type});
    by_key_[{e.name, e.type_name}] = e.id;
  }

  std::optional<NodeId> find(const std::string& name, const std::string& type) const {
    auto it = by_key_.find({name, type});
    if (it != by_key_.end()) return it->second;
    it = by_key_.find({name, ""});
    if (it != by_key_.end()) return it->second;
    return std::nullopt;
  }

  std::optional<NodeId> by_name(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<std::pair<std::string, std::string>, NodeId> by_key_;
  std::map<std::string, NodeId> by_name_;
};

class AssertionIndex {
 public:
  explicit AssertionIndex(const KnowledgeGraph& g) {
    for (const NodeId& id : g.node_ids_of(NodeType::kAssertion)) {
      const auto* a = g.get<AssertionNode>(id);
      map_[{a->head.value, a->relation, a->tail.value}] = id;
    }
  }
  std::optional<NodeId> find(const NodeId& h, const std::string& r, const NodeId& t) const {
    auto it = map_.find({h.value, r, t.value});
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void add(const AssertionNode& a) { map_[{a.head.value, a.relation, a.tail.value}] = a.id; }

 private:
  std::map<std::tuple<std::string, std::string, std::string>, NodeId> map_;
};

// Edge kinds (entity, assertion) toward a provenance node. Documents have
// none: triplet-file provenance lives in src_id_list only.
std::optional<std::pair<EdgeKind, EdgeKind>> provenance_kinds(NodeType source) {
  switch (source) {
    case NodeType::kChunk: return std::pair{EdgeKind::kEntChk, EdgeKind::kAssChk};
    case NodeType::kImage: return std::pair{EdgeKind::kEntImg, EdgeKind::kAssImg};
    case NodeType::kTable: return std::pair{EdgeKind::kEntTbl, EdgeKind::kAssTbl};
    case NodeType::kFormula: return std::pair{EdgeKind::kEntFml, EdgeKind::kAssFml};
    default: return std::nullopt;
  }
}

void add_unique(std::vector<NodeId>& list, const NodeId& id) {
  if (std::find(list.begin(), list.end(), id) == list.end()) list.push_back(id);
}

// Everything needed to write extracted items into the graph.
struct Writer {
  KnowledgeGraph& graph;
  const Schema& schema;
  BuildReport& report;
  EntityIndex entities;
  AssertionIndex assertions;

  Writer(KnowledgeGraph& g, const Schema& s, BuildReport& r)
      : graph(g), schema(s), report(r), entities(g), assertions(g) {}

  // Adds provenance `sources` to an entity (creating it if needed).
  NodeId upsert_entity(const ExtractedEntity& x, const std::vector<NodeId>& sources,
                       const std::set<std::string>& labels) {
    std::map<std::string, std::string> attrs;
    const EntityType* type = schema.entity_type(x.type);
    for (const auto& [k, v] : x.attrs) {
      if (!type || type->attribute_keys.empty() ||
          std::find(type->attribute_keys.begin(), type->attribute_keys.end(), k) !=
              type->attribute_keys.end()) {
        attrs[k] = v;
      }
    }
    NodeId id;
    if (auto found = entities.find(x.name, x.type)) {
      id = *found;
      EntityNode* e = graph.get_mutable<EntityNode>(id);
      if (e->type_name.empty() && !x.type.empty()) {
        e->type_name = x.type;
        entities.retype(*e, "");
      }
      if (e->desc.empty()) e->desc = x.desc;
      for (const auto& [k, v] : attrs) e->attr.emplace(k, v);
      for (const NodeId& s : sources) add_unique(e->src_id_list, s);
      e->labels.insert(labels.begin(), labels.end());
    } else {
      EntityNode e;
      e.id = make_node_id(NodeType::kEntity, {x.name, x.type});
      e.name = x.name;
      e.type_name = x.type;
      e.desc = x.desc;
      e.attr = std::move(attrs);
      e.src_id_list = sources;
      e.labels = labels;
      id = graph.add_node(e);
      entities.add(e);
    }
    for (const NodeId& s : sources) {
      if (auto k = provenance_kinds(node_type(graph.at(s)))) graph.add_edge(id, s, k->first);
    }
    return id;
  }

  NodeId upsert_assertion(const NodeId& head, const std::string& relation, const NodeId& tail,
                          const std::string& desc, const std::vector<NodeId>& sources,
                          const std::set<std::string>& labels) {
    NodeId id;
    if (auto found = assertions.find(head, relation, tail)) {
      id = *found;
      AssertionNode* a = graph.get_mutable<AssertionNode>(id);
      if (a->desc.empty()) a->desc = desc;
      for (const NodeId& s : sources) add_unique(a->src_id_list, s);
      a->labels.insert(labels.begin(), labels.end());
    } else {
      AssertionNode a;
      a.id = make_node_id(NodeType::kAssertion, {head.value, relation, tail.value});
      a.head = head;
      a.relation = relation;
      a.tail = tail;
      a.desc = desc.empty() ? graph.get<EntityNode>(head)->name + " " + relation + " " +
                                  graph.get<EntityNode>(tail)->name
                            : desc;
      a.src_id_list = sources;
      a.labels = labels;
      id = graph.add_node(a);
      assertions.add(a);
      graph.add_edge(head, tail, EdgeKind::kEntEnt, id);
    }
    for (const NodeId& s : sources) {
      if (auto k = provenance_kinds(node_type(graph.at(s)))) graph.add_edge(id, s, k->second);
    }
    return id;
  }

  // Schema check for a relation between two entities; returns the extra label
  // needed ("discovered") or nullopt when the relation must be dropped.
  std::optional<std::set<std::string>> relation_labels(const std::string& relation,
                                                       const NodeId& head, const NodeId& tail) {
    const auto* h = graph.get<EntityNode>(head);
    const auto* t = graph.get<EntityNode>(tail);
    if (relation.empty() || head == tail) return std::nullopt;
    if (schema.relation_permitted(relation, h->type_name, t->type_name)) {
      return std::set<std::string>{};
    }
    if (schema.allow_discovered_relations) {
      return std::set<std::string>{std::string(kDiscoveredLabel)};
    }
    return std::nullopt;
  }

  void apply(const Extraction& x, const NodeId& source, bool modal) {
    std::set<std::string> labels;
    if (modal) labels.insert(std::string(kModalLabel));
    std::map<std::string, NodeId> local;
    for (const ExtractedEntity& e : x.entities) {
      if (e.name.empty()) continue;
      if (!schema.entity_type(e.type)) {
        ++report.dropped_unknown_type;
        continue;
      }
      local.emplace(e.name, upsert_entity(e, {source}, labels));
    }
    for (const ExtractedAssertion& a : x.assertions) {
      auto resolve = [&](const std::string& name) -> std::optional<NodeId> {
        auto it = local.find(name);
        if (it != local.end()) return it->second;
        return entities.by_name(name);
      };
      auto head = resolve(a.head), tail = resolve(a.tail);
      if (!head || !tail) {
        ++report.dropped_dangling;
        continue;
      }
      auto extra = relation_labels(a.relation, *head, *tail);
      if (!extra) {
        ++report.dropped_relation;
        continue;
      }
      extra->insert(labels.begin(), labels.end());
      upsert_assertion(*head, a.relation, *tail, a.desc, {source}, *extra);
    }
  }
};

std::string element_kind_word(NodeType t) {
  switch (t) {
    case NodeType::kImage: return "image";
    case NodeType::kTable: return "table";
    case NodeType::kFormula: return "formula";
    default: return "text";
  }
}

template <NodeType T>
const ModalNode<T>* as_modal(const KnowledgeGraph& g, const NodeId& id) {
  return g.get<ModalNode<T>>(id);
}

// (content, caption, desc) of a modal node.
std::tuple<std::string, std::string, std::string> modal_fields(const KnowledgeGraph& g,
                                                                const NodeId& id) {
  if (auto* n = as_modal<NodeType::kImage>(g, id)) return {n->content, n->caption, n->desc};
  if (auto* n = as_modal<NodeType::kTable>(g, id)) return {n->content, n->caption, n->desc};
  if (auto* n = as_modal<NodeType::kFormula>(g, id)) return {n->content, n->caption, n->desc};
  return {};
}

// Text an extraction or discovery prompt can read for a provenance node.
std::optional<std::string> source_context(const KnowledgeGraph& g, const NodeId& id) {
  const Node* n = g.find(id);
  if (!n) return std::nullopt;
  switch (node_type(*n)) {
    case NodeType::kChunk: return std::get<ChunkNode>(*n).content;
    case NodeType::kImage:
    case NodeType::kTable:
    case NodeType::kFormula: {
      auto [content, caption, desc] = modal_fields(g, id);
      std::string out;
      if (!caption.empty()) out += caption + "\n";
      if (!desc.empty()) out += desc + "\n";
      return out + content;
    }
    default: return std::nullopt;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Stage 1.

namespace {

struct PlacedChunk {
  std::string text;
  int page_index = 0;
  NodeId id;
};

struct ElementJob {
  std::size_t doc = 0;
  std::size_t block = 0;
  NodeId id;
  NodeType type = NodeType::kImage;
  std::string context;  // table: referencing chunk; formula: neighbours; image: caption+text
};

NodeType element_type(BlockKind k) {
  switch (k) {
    case BlockKind::kImage: return NodeType::kImage;
    case BlockKind::kTable: return NodeType::kTable;
    default: return NodeType::kFormula;
  }
}

EdgeKind chunk_to(NodeType t) {
  switch (t) {
    case NodeType::kImage: return EdgeKind::kChkImg;
    case NodeType::kTable: return EdgeKind::kChkTbl;
    default: return EdgeKind::kChkFml;
  }
}

EdgeKind element_to_doc(NodeType t) {
  switch (t) {
    case NodeType::kImage: return EdgeKind::kImgDoc;
    case NodeType::kTable: return EdgeKind::kTblDoc;
    default: return EdgeKind::kFmlDoc;
  }
}

std::string block_text(const Block& b) {
  if (b.kind == BlockKind::kText) return b.content;
  std::string out = b.caption.value_or("");
  if (b.kind == BlockKind::kFormula) out += (out.empty() ? "" : "\n") + b.content;
  return out;
}

}  // namespace

KnowledgeGraph build_stage1(const std::vector<ParsedDocument>& documents,
                            const std::vector<TripletSource>& triplets, const Schema& schema,
                            const Gateway& gateway, const BuilderOptions& options,
                            BuildReport& report) {
  const PromptLibrary& prompts = options.prompt_library();
  KnowledgeGraph g;
  std::vector<ElementJob> jobs;

  for (std::size_t di = 0; di < documents.size(); ++di) {
    const ParsedDocument& doc = documents[di];
    if (!doc.schema.empty() && doc.schema != schema.name) {
      throw SchemaUnknown("document '" + doc.source_path + "' names schema '" + doc.schema +
                          "', but only '" + schema.name + "' is loaded");
    }
    std::vector<std::size_t> text_blocks;
    std::vector<std::string> fragments;
    for (std::size_t bi = 0; bi < doc.blocks.size(); ++bi) {
      if (doc.blocks[bi].kind == BlockKind::kText && !trim(doc.blocks[bi].content).empty()) {
        text_blocks.push_back(bi);
        fragments.push_back(doc.blocks[bi].content);
      }
    }

    DocumentNode dn;
    dn.id = make_node_id(NodeType::kDocument, {doc.source_path, doc.title});
    dn.content = join(fragments, "\n");
    dn.title = doc.title;
    dn.path = doc.source_path;
    dn.schema = schema.name;
    const NodeId doc_id = g.add_node(dn);

    // Merge fragments that run across block/page boundaries, then chunk.
    std::vector<PlacedChunk> chunks;
    std::map<std::size_t, std::size_t> chunk_of_block;  // text block -> chunk holding its end
    for (const auto& group : merge_cross_boundary_groups(fragments)) {
      std::string merged;
      std::vector<std::size_t> ends;
      for (std::size_t f : group) {
        merged += fragments[f];
        ends.push_back(merged.size());
      }
      const int page = doc.blocks[text_blocks[group.front()]].page_index;
      std::size_t start = 0, gi = 0;
      for (std::string& piece : chunk_text(merged, options.chunk.separators,
                                           options.chunk.max_chars)) {
        std::size_t stop = start + piece.size();
        while (gi < group.size() && ends[gi] <= stop) {
          chunk_of_block[text_blocks[group[gi]]] = chunks.size();
          ++gi;
        }
        chunks.push_back({std::move(piece), page, {}});
        start = stop;
      }
    }
    for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
      ChunkNode cn;
      cn.id = make_node_id(NodeType::kChunk, {doc_id.value, std::to_string(ci), chunks[ci].text});
      cn.content = chunks[ci].text;
      cn.doc_id = doc_id;
      chunks[ci].id = g.add_node(cn);
      g.add_edge(chunks[ci].id, doc_id, EdgeKind::kChkDoc);
    }

    std::vector<std::vector<std::string>> chunk_refs;
    for (const PlacedChunk& c : chunks) chunk_refs.push_back(find_element_references(c.text));

    for (std::size_t bi = 0; bi < doc.blocks.size(); ++bi) {
      const Block& b = doc.blocks[bi];
      if (b.kind == BlockKind::kText) continue;
      const NodeType type = element_type(b.kind);
      std::string content = b.content;
      if (trim(content).empty() && b.asset_path) content = *b.asset_path;
      if (trim(content).empty()) content = b.caption.value_or("");
      if (trim(content).empty()) {
        report.messages.push_back("skipped empty " + element_kind_word(type) + " block " +
                                  std::to_string(bi) + " in " + doc.source_path);
        continue;
      }
      ElementJob job{di, bi, {}, type, {}};
      Node node;
      auto fill = [&](auto n) {
        n.id = make_node_id(type, {doc_id.value, std::to_string(bi), content});
        n.content = content;
        n.caption = b.caption.value_or("");
        if (type != NodeType::kFormula) n.path = b.asset_path;
        node = n;
      };
      if (type == NodeType::kImage) fill(ImageNode{});
      else if (type == NodeType::kTable) fill(TableNode{});
      else fill(FormulaNode{});
      job.id = g.add_node(std::move(node));
      g.add_edge(job.id, doc_id, element_to_doc(type));

      // Chunks that cite the element by caption id; otherwise the chunk holding
      // the end of the nearest preceding text block.
      std::vector<std::size_t> refs;
      if (auto label = element_label(b.kind, b.caption.value_or(""), b.content)) {
        for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
          if (std::find(chunk_refs[ci].begin(), chunk_refs[ci].end(), *label) !=
              chunk_refs[ci].end()) {
            refs.push_back(ci);
          }
        }
      }
      if (refs.empty()) {
        for (std::size_t p = bi; p-- > 0;) {
          auto it = chunk_of_block.find(p);
          if (it != chunk_of_block.end()) {
            refs.push_back(it->second);
            break;
          }
        }
      }
      for (std::size_t ci : refs) g.add_edge(chunks[ci].id, job.id, chunk_to(type));

      if (type == NodeType::kTable) {
        job.context = refs.empty() ? std::string() : chunks[refs.front()].text;
      } else if (type == NodeType::kFormula) {
        const std::size_t k = static_cast<std::size_t>(std::max(0, options.formula_context_k));
        std::vector<std::string> around;
        for (std::size_t p = bi >= k ? bi - k : 0; p < std::min(doc.blocks.size(), bi + k + 1);
             ++p) {
          if (p == bi) {
            around.push_back("[formula]");
          } else if (std::string t = block_text(doc.blocks[p]); !trim(t).empty()) {
            around.push_back(t);
          }
        }
        job.context = join(around, "\n");
      } else {
        std::vector<std::string> around;
        if (!refs.empty()) around.push_back(chunks[refs.front()].text);
        job.context = join(around, "\n");
      }
      jobs.push_back(std::move(job));
    }
  }

  // Descriptions, fanned out; applied in source order.
  std::vector<std::string> descs = parallel_map(jobs.size(), gateway.workers, [&](std::size_t i) {
    const ElementJob& job = jobs[i];
    const ParsedDocument& doc = documents[job.doc];
    const Block& b = doc.blocks[job.block];
    const std::string caption = b.caption.value_or("");
    if (job.type == NodeType::kImage) {
      if (!b.asset_path) {
        return std::string(trim(b.content));
      }
      std::string file = (std::filesystem::path(doc.corpus_root) / *b.asset_path).string();
      return std::string(trim(gateway.require_vision().describe_image(
          file, job.context, prompts.render("describe_image", {{"caption", caption}}))));
    }
    std::string prompt =
        job.type == NodeType::kTable
            ? prompts.render("describe_table",
                             {{"caption", caption}, {"context", job.context}, {"content", b.content}})
            : prompts.render("describe_formula",
                             {{"context", job.context}, {"content", b.content}});
    return std::string(trim(gateway.require_chat()
                                .chat(user_request(prompt, gateway.extraction_temperature, false))
                                .text));
  });
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (auto* n = g.get_mutable<ImageNode>(jobs[i].id)) n->desc = descs[i];
    if (auto* n = g.get_mutable<TableNode>(jobs[i].id)) n->desc = descs[i];
    if (auto* n = g.get_mutable<FormulaNode>(jobs[i].id)) n->desc = descs[i];
  }

  // Triplet files: one document each, untyped entities.
  Writer w(g, schema, report);
  for (const TripletSource& src : triplets) {
    std::vector<std::string> lines;
    for (const RawTriplet& t : src.triplets) {
      lines.push_back(t.head + "\t" + t.relation + "\t" + t.tail);
    }
    DocumentNode dn;
    dn.id = make_node_id(NodeType::kDocument, {src.path, "triplets"});
    dn.content = join(lines, "\n");
    dn.title = std::filesystem::path(src.path).stem().string();
    dn.path = src.path;
    dn.schema = schema.name;
    const NodeId doc_id = g.add_node(dn);
    const std::set<std::string> labels{std::string(kTripletLabel)};
    for (const RawTriplet& t : src.triplets) {
      NodeId head = w.upsert_entity({t.head, "", "", {}}, {doc_id}, labels);
      NodeId tail = w.upsert_entity({t.tail, "", "", {}}, {doc_id}, labels);
      if (head == tail) {
        ++report.dropped_relation;
        continue;
      }
      std::set<std::string> alabels = labels;
      if (!schema.relation(t.relation)) alabels.insert(std::string(kDiscoveredLabel));
      w.upsert_assertion(head, t.relation, tail, t.desc.value_or(""), {doc_id}, alabels);
    }
  }
  return g;
}
// ---------------------------------------------------------------------------
// Stage 2.

KnowledgeGraph build_stage2(KnowledgeGraph g, const Schema& schema, const Gateway& gateway,
                            const BuilderOptions& options, BuildReport& report) {
  const PromptLibrary& prompts = options.prompt_library();
  struct Source {
    NodeId id;
    bool modal;
    std::string prompt;
  };
  const std::string entity_types = describe_entity_types(schema);
  const std::string relation_types = describe_relation_types(schema);
  std::vector<Source> sources;
  for (const NodeId& id : g.node_ids()) {
    const Node& n = g.at(id);
    NodeType t = node_type(n);
    if (t == NodeType::kChunk) {
      const std::string& text = std::get<ChunkNode>(n).content;
      if (trim(text).empty()) continue;
      sources.push_back({id, false,
                         prompts.render("extract_text", {{"entity_types", entity_types},
                                                         {"relation_types", relation_types},
                                                         {"text", text}})});
    } else if (t == NodeType::kImage || t == NodeType::kTable || t == NodeType::kFormula) {
      auto [content, caption, desc] = modal_fields(g, id);
      sources.push_back({id, true,
                         prompts.render("extract_element", {{"element_kind", element_kind_word(t)},
                                                            {"entity_types", entity_types},
                                                            {"relation_types", relation_types},
                                                            {"caption", caption},
                                                            {"desc", desc},
                                                            {"content", content}})});
    }
  }
  if (sources.empty()) return g;
  const EndpointPool& chat = gateway.require_chat();
  auto replies = parallel_map(sources.size(), gateway.workers, [&](std::size_t i) {
    return ask_structured(chat, sources[i].prompt, gateway.extraction_temperature,
                          options.extraction_retries, valid_extraction);
  });
  Writer w(g, schema, report);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (!replies[i]) {
      ++report.extraction_parse_failures;
      report.messages.push_back("ExtractionParseError: no usable reply for " +
                                sources[i].id.value);
      continue;
    }
    w.apply(read_extraction(*replies[i]), sources[i].id, sources[i].modal);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Stage 3.

namespace {

struct Anchor {
  NodeId entity;
  std::vector<NodeId> sources;  // non-document provenance
  std::string context;
};

}  // namespace

KnowledgeGraph build_stage3(KnowledgeGraph g, const Schema& schema, const Gateway& gateway,
                            const BuilderOptions& options, BuildReport& report) {
  const PromptLibrary& prompts = options.prompt_library();
  std::vector<Anchor> anchors;
  for (const NodeId& id : g.node_ids_of(NodeType::kEntity)) {
    const auto* e = g.get<EntityNode>(id);
    Anchor a{id, {}, {}};
    std::vector<std::string> parts;
    for (const NodeId& s : e->src_id_list) {
      if (auto text = source_context(g, s)) {
        a.sources.push_back(s);
        parts.push_back(*text);
      }
    }
    if (a.sources.empty()) continue;
    a.context = join(parts, "\n---\n");
    anchors.push_back(std::move(a));
  }
  if (anchors.empty()) return g;

  std::vector<std::string> relation_names;
  for (const RelationType& r : schema.relation_types) relation_names.push_back(r.relation_name);
  const EndpointPool& chat = gateway.require_chat();
  auto valid_relations = [](const json& j) {
    return j.contains("relations") && valid_assertion_list(j, "relations");
  };
  auto replies = parallel_map(anchors.size(), gateway.workers, [&](std::size_t i) {
    const auto* e = g.get<EntityNode>(anchors[i].entity);
    std::string prompt = prompts.render(
        "discover_relations", {{"name", e->name},
                               {"type", e->type_name.empty() ? "untyped" : e->type_name},
                               {"desc", e->desc},
                               {"context", anchors[i].context},
                               {"relation_names", join(relation_names, ", ")}});
    return ask_structured(chat, prompt, gateway.extraction_temperature,
                          options.extraction_retries, valid_relations);
  });

  Writer w(g, schema, report);
  struct Proposal {
    std::size_t anchor;
    ExtractedAssertion a;
  };
  std::vector<Proposal> proposals;
  std::vector<std::string> unknown;          // names needing recall, first-seen order
  std::map<std::string, std::size_t> recall_anchor;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (!replies[i]) {
      ++report.discovery_parse_failures;
      continue;
    }
    for (ExtractedAssertion& a : read_assertions(*replies[i], "relations")) {
      if (a.head.empty() || a.tail.empty() || a.relation.empty()) {
        ++report.dropped_dangling;
        continue;
      }
      bool head_known = w.entities.by_name(a.head).has_value();
      bool tail_known = w.entities.by_name(a.tail).has_value();
      if (!head_known && !tail_known) {
        ++report.dropped_dangling;
        continue;
      }
      for (const std::string* name : {&a.head, &a.tail}) {
        if (!w.entities.by_name(*name) && !recall_anchor.count(*name)) {
          recall_anchor[*name] = i;
          unknown.push_back(*name);
        }
      }
      proposals.push_back({i, std::move(a)});
    }
  }

  std::vector<std::string> type_names;
  for (const EntityType& t : schema.entity_types) type_names.push_back(t.type_name);
  auto valid_recall = [](const json& j) {
    return j.contains("desc") && (j["desc"].is_string() || j["desc"].is_null());
  };
  auto recalls = parallel_map(unknown.size(), gateway.workers, [&](std::size_t i) {
    std::string prompt = prompts.render(
        "recall_entity", {{"name", unknown[i]},
                          {"type_names", join(type_names, ", ")},
                          {"context", anchors[recall_anchor.at(unknown[i])].context}});
    return ask_structured(chat, prompt, gateway.extraction_temperature,
                          options.extraction_retries, valid_recall);
  });
  // Candidates with supporting information, by name.
  std::map<std::string, ExtractedEntity> accepted;
  for (std::size_t i = 0; i < unknown.size(); ++i) {
    if (!recalls[i]) {
      ++report.discovery_parse_failures;
      ++report.recall_rejected;
      continue;
    }
    ExtractedEntity x{unknown[i], string_or_empty(*recalls[i], "type"),
                      string_or_empty(*recalls[i], "desc"), {}};
    if (x.desc.empty() || !schema.entity_type(x.type)) {
      ++report.recall_rejected;
      continue;
    }
    accepted.emplace(unknown[i], std::move(x));
  }

  for (const Proposal& p : proposals) {
    const Anchor& anchor = anchors[p.anchor];
    auto type_of = [&](const std::string& name) -> std::optional<std::string> {
      if (auto id = w.entities.by_name(name)) return g.get<EntityNode>(*id)->type_name;
      auto it = accepted.find(name);
      if (it == accepted.end()) return std::nullopt;
      return it->second.type;
    };
    auto ht = type_of(p.a.head), tt = type_of(p.a.tail);
    if (!ht || !tt) continue;  // candidate rejected at recall
    if (p.a.head == p.a.tail) {
      ++report.dropped_relation;
      continue;
    }
    std::set<std::string> labels{std::string(kDiscoveredLabel)};
    if (!schema.relation_permitted(p.a.relation, *ht, *tt) &&
        !schema.allow_discovered_relations) {
      ++report.dropped_relation;
      continue;
    }
    bool all_modal = std::all_of(anchor.sources.begin(), anchor.sources.end(),
                                 [&](const NodeId& s) {
                                   return node_type(g.at(s)) != NodeType::kChunk;
                                 });
    auto ensure = [&](const std::string& name) {
      if (auto id = w.entities.by_name(name)) return *id;
      std::set<std::string> elabels = labels;
      if (all_modal) elabels.insert(std::string(kModalLabel));
      ++report.discovered_entities;
      return w.upsert_entity(accepted.at(name), anchor.sources, elabels);
    };
    NodeId head = ensure(p.a.head);
    NodeId tail = ensure(p.a.tail);
    if (!w.assertions.find(head, p.a.relation, tail)) ++report.discovered_assertions;
    w.upsert_assertion(head, p.a.relation, tail, p.a.desc, anchor.sources, labels);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Stage 4.

namespace {

// Rebuilds the graph with entities folded per `entity_map` (absorbed ->
// survivor, survivors replaced by `merged`) and relations renamed per
// `relation_map`. Assertions that coincide afterwards are merged into the
// first one; assertions that become self-loops are dropped.
KnowledgeGraph rebuild(const KnowledgeGraph& graph,
                       const std::unordered_map<std::string, NodeId>& entity_map,
                       const std::unordered_map<std::string, EntityNode>& merged,
                       const std::map<std::string, std::string>& relation_map,
                       BuildReport& report) {
  auto map_entity = [&](const NodeId& id) {
    auto it = entity_map.find(id.value);
    return it == entity_map.end() ? id : it->second;
  };
  KnowledgeGraph out;
  std::unordered_map<std::string, NodeId> assertion_alias;  // old id -> kept id
  std::set<std::string> dropped;
  std::map<std::tuple<std::string, std::string, std::string>, NodeId> by_key;
  for (const NodeId& id : graph.node_ids()) {
    const Node& n = graph.at(id);
    if (const auto* e = std::get_if<EntityNode>(&n)) {
      auto m = merged.find(id.value);
      if (m != merged.end()) {
        out.add_node(m->second);
      } else if (!entity_map.count(id.value)) {
        out.add_node(*e);
      }
    } else if (const auto* a = std::get_if<AssertionNode>(&n)) {
      AssertionNode copy = *a;
      copy.head = map_entity(a->head);
      copy.tail = map_entity(a->tail);
      if (auto r = relation_map.find(a->relation); r != relation_map.end()) {
        copy.relation = r->second;
      }
      if (copy.head == copy.tail) {
        ++report.collapsed_assertions;
        dropped.insert(id.value);
        continue;
      }
      auto key = std::make_tuple(copy.head.value, copy.relation, copy.tail.value);
      auto found = by_key.find(key);
      if (found != by_key.end()) {
        AssertionNode* keep = out.get_mutable<AssertionNode>(found->second);
        for (const NodeId& s : copy.src_id_list) add_unique(keep->src_id_list, s);
        keep->labels.insert(copy.labels.begin(), copy.labels.end());
        assertion_alias[id.value] = found->second;
        continue;
      }
      by_key.emplace(key, id);
      out.add_node(copy);
    } else {
      out.add_node(n);
    }
  }
  for (const Edge& e : graph.edges()) {
    if (dropped.count(e.src.value) || (e.assertion_id && dropped.count(e.assertion_id->value))) {
      continue;
    }
    auto map_any = [&](const NodeId& id) {
      auto a = assertion_alias.find(id.value);
      return a != assertion_alias.end() ? a->second : map_entity(id);
    };
    std::optional<NodeId> aid;
    if (e.assertion_id) aid = map_any(*e.assertion_id);
    out.add_edge(map_any(e.src), map_any(e.dst), e.kind, aid);
  }
  return out;
}

std::vector<Embedding> embed_all(const EndpointPool& pool, const std::vector<std::string>& texts,
                                 std::size_t batch) {
  std::vector<Embedding> out;
  batch = std::max<std::size_t>(batch, 1);
  for (std::size_t i = 0; i < texts.size(); i += batch) {
    std::vector<std::string> part(texts.begin() + static_cast<std::ptrdiff_t>(i),
                                  texts.begin() +
                                      static_cast<std::ptrdiff_t>(std::min(texts.size(), i + batch)));
    for (Embedding& v : pool.embed(part)) out.push_back(std::move(v));
  }
  return out;
}

// Asks the chat pool to confirm groups inside each candidate cluster. Returns
// confirmed groups as indices into the original item list.
std::vector<std::vector<std::size_t>> confirm_groups(
    const std::vector<std::vector<std::size_t>>& clusters,
    const std::vector<std::string>& item_lines, const std::string& prompt_name,
    const Gateway& gateway, const BuilderOptions& options, BuildReport& report) {
  std::vector<std::vector<std::size_t>> multi;
  for (const auto& c : clusters) {
    if (c.size() > 1) multi.push_back(c);
  }
  const PromptLibrary& prompts = options.prompt_library();
  auto valid = [](const json& j) {
    if (!j.contains("groups") || !j["groups"].is_array()) return false;
    for (const json& grp : j["groups"]) {
      if (!grp.is_array()) return false;
      for (const json& v : grp) {
        if (!v.is_number_integer()) return false;
      }
    }
    return true;
  };
  auto replies = parallel_map(multi.size(), gateway.workers, [&](std::size_t i) {
    std::string items;
    for (std::size_t k = 0; k < multi[i].size(); ++k) {
      items += std::to_string(k) + ". " + item_lines[multi[i][k]] + "\n";
    }
    return ask_structured(gateway.require_chat(), prompts.render(prompt_name, {{"items", items}}),
                          gateway.extraction_temperature, 0, valid);
  });
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < multi.size(); ++i) {
    if (!replies[i]) {
      ++report.grouping_parse_failures;
      continue;
    }
    std::set<std::size_t> used;
    for (const json& grp : (*replies[i])["groups"]) {
      std::vector<std::size_t> members;
      for (const json& v : grp) {
        long long k = v.get<long long>();
        if (k < 0 || static_cast<std::size_t>(k) >= multi[i].size()) continue;
        std::size_t item = multi[i][static_cast<std::size_t>(k)];
        if (used.insert(item).second) members.push_back(item);
      }
      std::sort(members.begin(), members.end());
      if (members.size() > 1) out.push_back(std::move(members));
    }
  }
  return out;
}

}  // namespace

KnowledgeGraph merge_entities(const KnowledgeGraph& graph, const std::vector<MergeGroup>& groups,
                              BuildReport& report) {
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < graph.node_ids().size(); ++i) {
    position[graph.node_ids()[i].value] = i;
  }
  std::unordered_map<std::string, NodeId> entity_map;
  std::unordered_map<std::string, EntityNode> merged;
  for (const MergeGroup& group : groups) {
    std::vector<const EntityNode*> members;
    for (const NodeId& id : group.members) {
      const auto* e = graph.get<EntityNode>(id);
      if (!e) throw UnknownNode("merge member '" + id.value + "' is not an entity");
      if (entity_map.count(id.value) || merged.count(id.value)) continue;
      if (std::find(members.begin(), members.end(), e) == members.end()) members.push_back(e);
    }
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end(), [&](const EntityNode* a, const EntityNode* b) {
      return position.at(a->id.value) < position.at(b->id.value);
    });
    // Canonical name: most provenance occurrences, ties lexicographically smallest.
    std::map<std::string, std::size_t> weight;
    for (const EntityNode* e : members) weight[e->name] += e->src_id_list.size();
    std::string canonical;
    std::size_t best = 0;
    for (const auto& [name, w] : weight) {
      if (canonical.empty() || w > best) {
        canonical = name;
        best = w;
      }
    }
    const EntityNode* survivor = *std::find_if(members.begin(), members.end(),
                                               [&](const EntityNode* e) { return e->name == canonical; });
    EntityNode m = *survivor;
    m.src_id_list.clear();
    m.attr.clear();
    for (const EntityNode* e : members) {
      if (m.type_name.empty()) m.type_name = e->type_name;
      if (m.desc.empty()) m.desc = e->desc;
      for (const auto& [k, v] : e->attr) m.attr.emplace(k, v);
      m.src_id_list.insert(m.src_id_list.end(), e->src_id_list.begin(), e->src_id_list.end());
      m.labels.insert(e->labels.begin(), e->labels.end());
    }
    // The merged node takes the earliest member's slot so every assertion
    // that referred to any member still follows it.
    const EntityNode* first = members.front();
    for (const EntityNode* e : members) {
      if (e != first) entity_map[e->id.value] = m.id;
    }
    if (first != survivor) entity_map[first->id.value] = m.id;
    merged[first->id.value] = std::move(m);
    report.merged_entities += members.size() - 1;
  }
  if (merged.empty()) return graph;
  return rebuild(graph, entity_map, merged, {}, report);
}

KnowledgeGraph rename_relations(const KnowledgeGraph& graph,
                                const std::map<std::string, std::string>& renames,
                                BuildReport& report) {
  std::map<std::string, std::string> effective;
  for (const auto& [from, to] : renames) {
    if (from != to) effective.emplace(from, to);
  }
  if (effective.empty()) return graph;
  report.merged_relations += effective.size();
  return rebuild(graph, {}, {}, effective, report);
}

void prune_modal_singletons(KnowledgeGraph& graph, BuildReport& report) {
  for (const NodeId& id : graph.node_ids_of(NodeType::kEntity)) {
    const auto* e = graph.get<EntityNode>(id);
    if (!e || !e->labels.count(std::string(kModalLabel)) || e->src_id_list.size() != 1) continue;
    std::set<std::string> assertions;
    for (const Edge& edge : graph.out_edges(id)) {
      if (edge.assertion_id) assertions.insert(edge.assertion_id->value);
    }
    for (const Edge& edge : graph.in_edges(id)) {
      if (edge.assertion_id) assertions.insert(edge.assertion_id->value);
    }
    graph.remove_node(id);
    ++report.pruned_entities;
    report.pruned_assertions += assertions.size();
  }
}

KnowledgeGraph build_stage4(KnowledgeGraph g, const Schema& schema, const Gateway& gateway,
                            const BuilderOptions& options, BuildReport& report) {
  // (a)-(c) entity resolution.
  std::vector<NodeId> ids = g.node_ids_of(NodeType::kEntity);
  if (ids.size() > 1) {
    std::vector<std::string> texts, lines;
    for (const NodeId& id : ids) {
      const auto* e = g.get<EntityNode>(id);
      texts.push_back(e->desc.empty() ? e->name : e->desc);
      lines.push_back(e->name + " (" + (e->type_name.empty() ? "untyped" : e->type_name) +
                      "): " + e->desc);
    }
    auto vectors = embed_all(gateway.require_embedding(), texts, options.embed_batch);
    auto clusters = single_link_clusters(vectors, options.cluster_threshold,
                                         [&](std::size_t i, std::size_t j) {
                                           const auto* a = g.get<EntityNode>(ids[i]);
                                           const auto* b = g.get<EntityNode>(ids[j]);
                                           return a->type_name == b->type_name ||
                                                  a->type_name.empty() || b->type_name.empty();
                                         });
    std::vector<MergeGroup> groups;
    for (const auto& grp : confirm_groups(clusters, lines, "group_entities", gateway, options,
                                          report)) {
      MergeGroup m;
      for (std::size_t i : grp) m.members.push_back(ids[i]);
      groups.push_back(std::move(m));
    }
    g = merge_entities(g, groups, report);
  }

  // (d) relation normalization.
  std::vector<std::string> names;
  std::map<std::string, std::size_t> uses;
  for (const NodeId& id : g.node_ids_of(NodeType::kAssertion)) {
    const std::string& r = g.get<AssertionNode>(id)->relation;
    if (uses[r]++ == 0) names.push_back(r);
  }
  if (names.size() > 1) {
    std::vector<std::string> texts;
    for (const std::string& n : names) {
      const RelationType* r = schema.relation(n);
      texts.push_back(r && !r->description.empty() ? n + ": " + r->description : n);
    }
    auto vectors = embed_all(gateway.require_embedding(), texts, options.embed_batch);
    auto clusters = single_link_clusters(vectors, options.cluster_threshold,
                                         [](std::size_t, std::size_t) { return true; });
    std::map<std::string, std::string> renames;
    for (const auto& grp : confirm_groups(clusters, texts, "group_relations", gateway, options,
                                          report)) {
      // Prefer a schema relation, then the most used, then the smallest name.
      std::size_t best = grp.front();
      auto better = [&](std::size_t a, std::size_t b) {
        bool sa = schema.relation(names[a]) != nullptr, sb = schema.relation(names[b]) != nullptr;
        if (sa != sb) return sa;
        if (uses[names[a]] != uses[names[b]]) return uses[names[a]] > uses[names[b]];
        return names[a] < names[b];
      };
      for (std::size_t i : grp) {
        if (better(i, best)) best = i;
      }
      for (std::size_t i : grp) renames[names[i]] = names[best];
    }
    g = rename_relations(g, renames, report);
  }

  // (e) single-provenance modal entities.
  prune_modal_singletons(g, report);
  return g;
}

KnowledgeGraph build_graph(const std::vector<ParsedDocument>& documents,
                           const std::vector<TripletSource>& triplets, const Schema& schema,
                           const Gateway& gateway, const BuilderOptions& options,
                           BuildReport& report) {
  KnowledgeGraph g = build_stage1(documents, triplets, schema, gateway, options, report);
  report.stage_violations[0] = validate_graph(g).size();
  g = build_stage2(std::move(g), schema, gateway, options, report);
  report.stage_violations[1] = validate_graph(g).size();
  g = build_stage3(std::move(g), schema, gateway, options, report);
  report.stage_violations[2] = validate_graph(g).size();
  g = build_stage4(std::move(g), schema, gateway, options, report);
  report.stage_violations[3] = validate_graph(g).size();
  return g;
}

}  // namespace kgsynth
