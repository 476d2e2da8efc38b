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

#include "kgsynth/storage.h"

#include <cstdio>

#include "kgsynth/errors.h"
#include "kgsynth/json_locate.h"
#include "kgsynth/text.h"

namespace kgsynth {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json id_list(const std::vector<NodeId>& ids) {
  ordered_json a = ordered_json::array();
  for (const NodeId& id : ids) a.push_back(id.value);
  return a;
}

ordered_json label_list(const std::set<std::string>& labels) {
  ordered_json a = ordered_json::array();
  for (const auto& l : labels) a.push_back(l);
  return a;
}

// Field access that reports the byte offset of the offending value.
class Reader {
 public:
  explicit Reader(const LocatedJson& doc) : doc_(doc) {}

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    throw FormatError(msg, ptr, doc_.offset_of(ptr));
  }

  const json& require(const json& obj, const std::string& ptr, const char* key) const {
    if (!obj.is_object()) fail(ptr, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(ptr, std::string("missing field '") + key + "'");
    return *it;
  }

  std::string str(const json& obj, const std::string& ptr, const char* key) const {
    const json& v = require(obj, ptr, key);
    if (!v.is_string()) fail(ptr + "/" + key, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<NodeId> ids(const json& obj, const std::string& ptr, const char* key) const {
    const json& v = require(obj, ptr, key);
    if (!v.is_array()) fail(ptr + "/" + key, std::string("field '") + key + "' must be an array");
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) fail(ptr + "/" + key + "/" + std::to_string(i), "expected a string");
      out.emplace_back(v[i].get<std::string>());
    }
    return out;
  }

  std::set<std::string> labels(const json& obj, const std::string& ptr) const {
    std::set<std::string> out;
    for (const NodeId& id : ids(obj, ptr, "labels")) out.insert(id.value);
    return out;
  }

 private:
  const LocatedJson& doc_;
};

template <class M>
M modal_from(const Reader& r, const json& n, const std::string& ptr) {
  M m;
  m.id = NodeId(r.str(n, ptr, "id"));
  m.content = r.str(n, ptr, "content");
  m.caption = r.str(n, ptr, "caption");
  m.desc = r.str(n, ptr, "desc");
  if (auto it = n.find("path"); it != n.end() && !it->is_null()) {
    if (!it->is_string()) r.fail(ptr + "/path", "field 'path' must be a string or null");
    m.path = it->get<std::string>();
  }
  return m;
}

Node node_from(const Reader& r, const json& n, const std::string& ptr) {
  std::string type = r.str(n, ptr, "type");
  auto t = parse_node_type(type);
  if (!t) r.fail(ptr + "/type", "unknown node type '" + type + "'");
  switch (*t) {
    case NodeType::kDocument:
      return DocumentNode{NodeId(r.str(n, ptr, "id")), r.str(n, ptr, "content"),
                          r.str(n, ptr, "title"), r.str(n, ptr, "path"),
                          r.str(n, ptr, "schema")};
    case NodeType::kChunk:
      return ChunkNode{NodeId(r.str(n, ptr, "id")), r.str(n, ptr, "content"),
                       NodeId(r.str(n, ptr, "doc_id"))};
    case NodeType::kEntity: {
      EntityNode e;
      e.id = NodeId(r.str(n, ptr, "id"));
      e.name = r.str(n, ptr, "name");
      e.type_name = r.str(n, ptr, "type_name");
      e.desc = r.str(n, ptr, "desc");
      const json& attr = r.require(n, ptr, "attr");
      if (!attr.is_object()) r.fail(ptr + "/attr", "field 'attr' must be an object");
      for (const auto& [k, v] : attr.items()) {
        if (!v.is_string()) r.fail(ptr + "/attr/" + k, "attribute values must be strings");
        e.attr[k] = v.get<std::string>();
      }
      e.src_id_list = r.ids(n, ptr, "src_id_list");
      e.labels = r.labels(n, ptr);
      return e;
    }
    case NodeType::kAssertion: {
      AssertionNode a;
      a.id = NodeId(r.str(n, ptr, "id"));
      a.head = NodeId(r.str(n, ptr, "head"));
      a.relation = r.str(n, ptr, "relation");
      a.tail = NodeId(r.str(n, ptr, "tail"));
      a.desc = r.str(n, ptr, "desc");
      a.src_id_list = r.ids(n, ptr, "src_id_list");
      a.labels = r.labels(n, ptr);
      return a;
    }
    case NodeType::kImage: return modal_from<ImageNode>(r, n, ptr);
    case NodeType::kTable: return modal_from<TableNode>(r, n, ptr);
    case NodeType::kFormula: return modal_from<FormulaNode>(r, n, ptr);
  }
  r.fail(ptr, "unreachable");
}

// Cypher property map for a node, in field order.
std::string cypher_props(const Node& n) {
  ordered_json j = node_to_json(n);
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : j.items()) {
    if (k == "type" || v.is_null()) continue;
    if (!first) out += ", ";
    first = false;
    out += k + ": ";
    if (v.is_string()) {
      out += cypher_string(v.get<std::string>());
    } else if (v.is_array()) {
      out += "[";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += cypher_string(v[i].get<std::string>());
      }
      out += "]";
    } else {
      // Maps are not property values; store them as JSON text.
      out += cypher_string(v.dump());
    }
  }
  return out + "}";
}

}  // namespace

ordered_json node_to_json(const Node& n) {
  ordered_json j;
  j["id"] = node_id(n).value;
  j["type"] = std::string(node_type_name(node_type(n)));
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DocumentNode>) {
          j["content"] = v.content;
          j["title"] = v.title;
          j["path"] = v.path;
          j["schema"] = v.schema;
        } else if constexpr (std::is_same_v<T, ChunkNode>) {
          j["content"] = v.content;
          j["doc_id"] = v.doc_id.value;
        } else if constexpr (std::is_same_v<T, EntityNode>) {
          j["name"] = v.name;
          j["type_name"] = v.type_name;
          j["desc"] = v.desc;
          ordered_json attr = ordered_json::object();
          for (const auto& [k, val] : v.attr) attr[k] = val;
          j["attr"] = std::move(attr);
          j["src_id_list"] = id_list(v.src_id_list);
          j["labels"] = label_list(v.labels);
        } else if constexpr (std::is_same_v<T, AssertionNode>) {
          j["head"] = v.head.value;
          j["relation"] = v.relation;
          j["tail"] = v.tail.value;
          j["desc"] = v.desc;
          j["src_id_list"] = id_list(v.src_id_list);
          j["labels"] = label_list(v.labels);
        } else {
          j["content"] = v.content;
          j["caption"] = v.caption;
          j["path"] = v.path ? ordered_json(*v.path) : ordered_json(nullptr);
          j["desc"] = v.desc;
        }
      },
      n);
  return j;
}

ordered_json graph_to_json(const KnowledgeGraph& g, const std::string& schema_name) {
  ordered_json j;
  j["format_version"] = kGraphFormatVersion;
  j["schema_name"] = schema_name;
  ordered_json nodes = ordered_json::array();
  for (const NodeId& id : g.node_ids()) nodes.push_back(node_to_json(g.at(id)));
  ordered_json edges = ordered_json::array();
  for (const Edge& e : g.edges()) {
    ordered_json ej;
    ej["src"] = e.src.value;
    ej["dst"] = e.dst.value;
    ej["kind"] = edge_kind_name(e.kind);
    if (e.assertion_id) ej["assertion_id"] = e.assertion_id->value;
    edges.push_back(std::move(ej));
  }
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  return j;
}

GraphFile parse_graph(std::string_view text) {
  LocatedJson doc = parse_located(text);
  Reader r(doc);
  const json& root = doc.value;
  const json& version = r.require(root, "", "format_version");
  if (!version.is_number_integer()) r.fail("/format_version", "format_version must be an integer");
  if (version.get<long long>() != kGraphFormatVersion) {
    throw VersionMismatch("graph file has format_version " + version.dump() + ", expected " +
                          std::to_string(kGraphFormatVersion));
  }
  GraphFile out;
  out.schema_name = r.str(root, "", "schema_name");
  const json& nodes = r.require(root, "", "nodes");
  if (!nodes.is_array()) r.fail("/nodes", "field 'nodes' must be an array");
  const json& edges = r.require(root, "", "edges");
  if (!edges.is_array()) r.fail("/edges", "field 'edges' must be an array");

  std::vector<Node> ns;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    ns.push_back(node_from(r, nodes[i], "/nodes/" + std::to_string(i)));
  }
  std::vector<Edge> es;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string ptr = "/edges/" + std::to_string(i);
    const json& e = edges[i];
    std::string kind = r.str(e, ptr, "kind");
    auto k = parse_edge_kind(kind);
    if (!k) r.fail(ptr + "/kind", "unknown edge kind '" + kind + "'");
    Edge edge{NodeId(r.str(e, ptr, "src")), NodeId(r.str(e, ptr, "dst")), *k, std::nullopt};
    if (e.contains("assertion_id")) edge.assertion_id = NodeId(r.str(e, ptr, "assertion_id"));
    es.push_back(std::move(edge));
  }
  out.graph = KnowledgeGraph::from_parts(std::move(ns), std::move(es));
  return out;
}

void save_graph(const KnowledgeGraph& g, const std::string& path, const std::string& schema_name) {
  write_file(path, graph_to_json(g, schema_name).dump(1) + "\n");
}

GraphFile load_graph_file(const std::string& path) { return parse_graph(read_file(path)); }

KnowledgeGraph load_graph(const std::string& path) { return load_graph_file(path).graph; }

std::string cypher_string(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(c));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "'";
}

std::string cypher_script(const KnowledgeGraph& g) {
  std::string out;
  for (const NodeId& id : g.node_ids()) {
    const Node& n = g.at(id);
    out += "CREATE (:" + std::string(node_type_name(node_type(n))) + " " + cypher_props(n) + ");\n";
  }
  for (const Edge& e : g.edges()) {
    const std::string st(node_type_name(edge_source_type(e.kind)));
    const std::string dt(node_type_name(edge_target_type(e.kind)));
    out += "MATCH (a:" + st + " {id: " + cypher_string(e.src.value) + "}), (b:" + dt +
           " {id: " + cypher_string(e.dst.value) + "}) CREATE (a)-[:`" + edge_kind_name(e.kind) +
           "`";
    if (e.assertion_id) out += " {assertion_id: " + cypher_string(e.assertion_id->value) + "}";
    out += "]->(b);\n";
  }
  return out;
}

std::size_t export_cypher(const KnowledgeGraph& g, const std::string& path) {
  write_file(path, cypher_script(g));
  return g.node_count() + g.edge_count();
}

std::string dataset_to_jsonl(const std::vector<QARecord>& records) {
  std::string out;
  for (const QARecord& r : records) out += record_to_json(r).dump() + "\n";
  return out;
}

std::vector<QARecord> dataset_from_jsonl(std::string_view text) {
  std::vector<QARecord> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? end : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw FormatError("line is not a complete JSON record", "", FormatError::kNone, line_no);
    }
    try {
      out.push_back(record_from_json(j));
    } catch (const FormatError& e) {
      throw FormatError("bad record", e.field(), FormatError::kNone, line_no);
    }
  }
  return out;
}

void write_dataset(const std::vector<QARecord>& records, const std::string& path) {
  write_file(path, dataset_to_jsonl(records));
}

std::vector<QARecord> read_dataset(const std::string& path) {
  return dataset_from_jsonl(read_file(path));
}

void write_traces(const std::vector<Trace>& traces, const std::string& path) {
  std::string out;
  for (const Trace& t : traces) out += trace_to_json(t).dump() + "\n";
  write_file(path, out);
}

std::vector<Trace> read_traces(const std::string& path) {
  std::string text = read_file(path);
  std::vector<Trace> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    json j = json::parse(text.substr(pos, end - pos), nullptr, false);
    pos = end + 1;
    if (j.is_discarded()) {
      throw FormatError("line is not a complete JSON trace", "", FormatError::kNone, line_no);
    }
    try {
      out.push_back(trace_from_json(j));
    } catch (const Error& e) {
      throw FormatError(std::string("bad trace: ") + e.what(), "", FormatError::kNone, line_no);
    }
  }
  return out;
}

}  // namespace kgsynth
