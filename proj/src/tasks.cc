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

#include "kgsynth/tasks.h"

#include <numeric>

#include "kgsynth/errors.h"
#include "kgsynth/text.h"

namespace kgsynth {

using nlohmann::json;

CountRange TaskConfig::range_for(NodeType t) const {
  auto it = required_node_counts.find(t);
  return it == required_node_counts.end() ? CountRange{} : it->second;
}

bool is_known_template(std::string_view name) {
  return name == "open_qa" || name == "mcq" || name == "true_false";
}

void TaskConfig::validate() const {
  const std::string who = "task '" + task_name + "'";
  if (task_name.empty()) throw ConfigError("task without a task_name");
  if (!is_known_template(template_name)) {
    throw ConfigError(who + ": unknown template '" + template_name + "'");
  }
  if (max_nodes < 1) throw ConfigError(who + ": max_nodes must be >= 1");
  std::size_t mins = 0;
  for (const auto& [type, r] : required_node_counts) {
    if (r.max && *r.max < r.min) throw ConfigError(who + ": empty count window");
    mins += r.min;
  }
  if (mins > max_nodes) throw ConfigError(who + ": required minimums exceed max_nodes");
  if (subgraph_size < 1) throw ConfigError(who + ": subgraph_size must be >= 1");
}

// ---------------------------------------------------------------------------
// Presets.

namespace {

enum class Amount { kSingle, kMulti };

struct Part {
  NodeType type;
  Amount amount;
};

TaskConfig make_preset(std::string name, std::vector<Part> parts, bool multi_hop,
                       bool pure_entity = false) {
  TaskConfig t;
  t.task_name = std::move(name);
  for (NodeType m : {NodeType::kImage, NodeType::kTable, NodeType::kFormula}) {
    t.required_node_counts[m] = {0, 0};
  }
  t.required_node_counts[NodeType::kDocument] = {0, 0};
  t.required_node_counts[NodeType::kAssertion] = {0, 0};
  t.required_node_counts[NodeType::kEntity] = {multi_hop ? 2u : 1u, std::nullopt};
  if (pure_entity) t.required_node_counts[NodeType::kChunk] = {0, 0};
  std::string code;
  for (const Part& p : parts) {
    t.required_node_counts[p.type] =
        p.amount == Amount::kSingle ? CountRange{1, 1} : CountRange{2, std::nullopt};
    code += p.amount == Amount::kSingle ? "S" : "M";
    switch (p.type) {
      case NodeType::kImage: code += "I"; break;
      case NodeType::kTable: code += "T"; break;
      case NodeType::kFormula: code += "F"; break;
      default: code += "C"; break;
    }
  }
  if (pure_entity) code = "PE";
  if (multi_hop) code += "MH";
  t.code = code;
  return t;
}

std::vector<TaskConfig> build_presets() {
  const auto S = Amount::kSingle;
  const auto M = Amount::kMulti;
  const auto T = NodeType::kTable;
  const auto F = NodeType::kFormula;
  const auto I = NodeType::kImage;
  const auto C = NodeType::kChunk;
  std::vector<TaskConfig> out = {
      // Table-centric
      make_preset("Single-Table QA", {{T, S}}, false),
      make_preset("Single-Table Multi-hop QA", {{T, S}}, true),
      make_preset("Single-Table & Single-Chunk (Text) QA", {{T, S}, {C, S}}, false),
      make_preset("Single-Table & Multi-Chunk (Text) QA", {{T, S}, {C, M}}, false),
      make_preset("Multi-Table QA", {{T, M}}, false),
      make_preset("Multi-Table Multi-hop QA", {{T, M}}, true),
      make_preset("Multi-Table & Multi-Chunk (Text) QA", {{T, M}, {C, M}}, false),
      // Text-only
      make_preset("Single-Chunk (Text) QA", {{C, S}}, false),
      make_preset("Multi-Chunk (Text) QA", {{C, M}}, false),
      make_preset("Single-Chunk (Text) Multi-hop QA", {{C, S}}, true),
      make_preset("Multi-Chunk (Text) Multi-hop QA", {{C, M}}, true),
      // Formula-centric
      make_preset("Single-Formula QA", {{F, S}}, false),
      make_preset("Single-Formula Multi-hop QA", {{F, S}}, true),
      make_preset("Single-Formula & Single-Chunk (Text) QA", {{F, S}, {C, S}}, false),
      make_preset("Single-Formula & Multi-Chunk (Text) QA", {{F, S}, {C, M}}, false),
      make_preset("Multi-formula QA", {{F, M}}, false),
      make_preset("Multi-formula Multi-hop QA", {{F, M}}, true),
      make_preset("Multi-formula & Multi-Chunk (Text) QA", {{F, M}, {C, M}}, false),
      // Image-centric
      make_preset("Single Image QA", {{I, S}}, false),
      make_preset("Single Image Multi-hop QA", {{I, S}}, true),
      make_preset("Single Image & Single-Chunk (Text) QA", {{I, S}, {C, S}}, false),
      make_preset("Single Image & Multi-Chunk (Text) QA", {{I, S}, {C, M}}, false),
      make_preset("Multi-Image QA", {{I, M}}, false),
      make_preset("Multi-Image Multi-hop QA", {{I, M}}, true),
      make_preset("Multi-Image & Multi-Chunk (Text) QA", {{I, M}, {C, M}}, false),
      // Cross-modality
      make_preset("Single-Table & Single Image QA", {{T, S}, {I, S}}, false),
      make_preset("Single-Table & Single Image Multi-hop QA", {{T, S}, {I, S}}, true),
      make_preset("Single-Table & Single-Formula QA", {{T, S}, {F, S}}, false),
      make_preset("Single-Table & Single-Formula Multi-hop QA", {{T, S}, {F, S}}, true),
      make_preset("Single Image & Single-Formula QA", {{I, S}, {F, S}}, false),
      make_preset("Single Image & Single-Formula Multi-hop QA", {{I, S}, {F, S}}, true),
      // Entity-centric
      make_preset("Pure Entity Multi-hop QA", {}, true, true),
  };
  for (TaskConfig& t : out) t.validate();
  return out;
}

std::string type_key(NodeType t) { return ascii_lower(node_type_name(t)); }

NodeType parse_type_key(const std::string& s, const std::string& where) {
  auto t = parse_node_type(s);
  if (!t) throw ConfigError(where + ": unknown node type '" + s + "'");
  return *t;
}

json range_to_json(const CountRange& r) {
  return {{"min", r.min}, {"max", r.max ? json(*r.max) : json(nullptr)}};
}

std::size_t read_size(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError(where + " must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

std::optional<std::size_t> read_optional_size(const json& j, const std::string& where) {
  if (j.is_null()) return std::nullopt;
  return read_size(j, where);
}

AttributeFilters read_filters(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  AttributeFilters out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw ConfigError(where + "." + k + " must be a string");
    out[k] = v.get<std::string>();
  }
  return out;
}

}  // namespace

const std::vector<TaskConfig>& load_task_presets() {
  static const std::vector<TaskConfig> presets = build_presets();
  return presets;
}

const TaskConfig* find_preset(std::string_view name_or_code) {
  for (const TaskConfig& t : load_task_presets()) {
    if (t.task_name == name_or_code || t.code == name_or_code) return &t;
  }
  return nullptr;
}

nlohmann::ordered_json task_to_json(const TaskConfig& t) {
  nlohmann::ordered_json j;
  j["task_name"] = t.task_name;
  j["code"] = t.code;
  j["template"] = t.template_name;
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (NodeType type : kAllNodeTypes) {
    auto it = t.required_node_counts.find(type);
    if (it != t.required_node_counts.end()) counts[type_key(type)] = range_to_json(it->second);
  }
  j["required_node_counts"] = counts;
  j["max_depth"] = t.max_depth;
  j["max_nodes"] = t.max_nodes;
  nlohmann::ordered_json start;
  start["node_types"] = nlohmann::ordered_json::array();
  for (NodeType nt : t.start_criteria.node_types) start["node_types"].push_back(type_key(nt));
  start["min_out_degree"] = t.start_criteria.min_out_degree;
  start["attribute_filters"] = t.start_criteria.attribute_filters;
  j["start_criteria"] = start;
  nlohmann::ordered_json nb;
  nb["allowed_kinds"] = nlohmann::ordered_json::array();
  for (EdgeKind k : t.neighbor_constraints.allowed_kinds) nb["allowed_kinds"].push_back(edge_kind_name(k));
  nb["min_degree"] = t.neighbor_constraints.min_degree;
  nb["max_degree"] = t.neighbor_constraints.max_degree ? nlohmann::ordered_json(*t.neighbor_constraints.max_degree)
                                                       : nlohmann::ordered_json(nullptr);
  nb["attribute_filters"] = t.neighbor_constraints.attribute_filters;
  j["neighbor_constraints"] = nb;
  j["fuzzify"] = t.fuzzify;
  j["pronoun_substitute"] = t.pronoun_substitute;
  j["samples_requested"] = t.samples_requested;
  j["subgraph_size"] = t.subgraph_size;
  return j;
}

TaskConfig task_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("task record must be an object");
  TaskConfig t;
  if (j.contains("base")) {
    const std::string base = j["base"].is_string() ? j["base"].get<std::string>() : "";
    const TaskConfig* p = find_preset(base);
    if (!p) throw ConfigError("tasks: unknown base preset '" + base + "'");
    t = *p;
  }
  const std::string where =
      "task '" + (j.contains("task_name") ? j["task_name"].dump() : t.task_name) + "'";
  auto str = [&](const char* key, std::string& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) throw ConfigError(where + "." + key + " must be a string");
    out = j[key].get<std::string>();
  };
  auto flag = [&](const char* key, bool& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) throw ConfigError(where + "." + key + " must be a boolean");
    out = j[key].get<bool>();
  };
  str("task_name", t.task_name);
  str("code", t.code);
  str("template", t.template_name);
  if (j.contains("required_node_counts")) {
    const json& rc = j["required_node_counts"];
    if (!rc.is_object()) throw ConfigError(where + ".required_node_counts must be an object");
    for (const auto& [k, v] : rc.items()) {
      NodeType type = parse_type_key(k, where);
      if (!v.is_object()) throw ConfigError(where + ".required_node_counts." + k + " must be an object");
      CountRange r;
      if (v.contains("min")) r.min = read_size(v["min"], where + ".min");
      if (v.contains("max")) r.max = read_optional_size(v["max"], where + ".max");
      t.required_node_counts[type] = r;
    }
  }
  if (j.contains("max_depth")) t.max_depth = read_size(j["max_depth"], where + ".max_depth");
  if (j.contains("max_nodes")) t.max_nodes = read_size(j["max_nodes"], where + ".max_nodes");
  if (j.contains("start_criteria")) {
    const json& s = j["start_criteria"];
    if (!s.is_object()) throw ConfigError(where + ".start_criteria must be an object");
    if (s.contains("node_types")) {
      t.start_criteria.node_types.clear();
      if (!s["node_types"].is_array()) throw ConfigError(where + ".node_types must be an array");
      for (const json& v : s["node_types"]) {
        if (!v.is_string()) throw ConfigError(where + ".node_types entries must be strings");
        t.start_criteria.node_types.push_back(parse_type_key(v.get<std::string>(), where));
      }
    }
    if (s.contains("min_out_degree")) {
      t.start_criteria.min_out_degree = read_size(s["min_out_degree"], where + ".min_out_degree");
    }
    if (s.contains("attribute_filters")) {
      t.start_criteria.attribute_filters = read_filters(s["attribute_filters"], where);
    }
  }
  if (j.contains("neighbor_constraints")) {
    const json& n = j["neighbor_constraints"];
    if (!n.is_object()) throw ConfigError(where + ".neighbor_constraints must be an object");
    if (n.contains("allowed_kinds")) {
      if (!n["allowed_kinds"].is_array()) throw ConfigError(where + ".allowed_kinds must be an array");
      t.neighbor_constraints.allowed_kinds.clear();
      for (const json& v : n["allowed_kinds"]) {
        auto k = v.is_string() ? parse_edge_kind(v.get<std::string>()) : std::nullopt;
        if (!k) throw ConfigError(where + ": unknown edge kind " + v.dump());
        t.neighbor_constraints.allowed_kinds.push_back(*k);
      }
    }
    if (n.contains("min_degree")) {
      t.neighbor_constraints.min_degree = read_size(n["min_degree"], where + ".min_degree");
    }
    if (n.contains("max_degree")) {
      t.neighbor_constraints.max_degree = read_optional_size(n["max_degree"], where + ".max_degree");
    }
    if (n.contains("attribute_filters")) {
      t.neighbor_constraints.attribute_filters = read_filters(n["attribute_filters"], where);
    }
  }
  flag("fuzzify", t.fuzzify);
  flag("pronoun_substitute", t.pronoun_substitute);
  if (j.contains("samples_requested")) {
    t.samples_requested = read_size(j["samples_requested"], where + ".samples_requested");
  }
  if (j.contains("subgraph_size")) t.subgraph_size = read_size(j["subgraph_size"], where + ".subgraph_size");
  t.validate();
  return t;
}

}  // namespace kgsynth
