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

#include "kgsynth/trace_format.h"

#include <algorithm>
#include <set>

#include "kgsynth/errors.h"
#include "kgsynth/text.h"

namespace kgsynth {

namespace {

ContextBlock make_block(const KnowledgeGraph& g, const NodeId& id) {
  const Node* n = g.find(id);
  if (!n) throw DanglingTrace("trace node '" + id.value + "' is not in the graph");
  ContextBlock b;
  b.id = id;
  b.type = node_type(*n);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EntityNode>) {
          b.name = v.name;
          b.entity_type = v.type_name;
          if (!v.desc.empty()) b.fields.emplace_back("desc", v.desc);
          if (!v.attr.empty()) {
            std::vector<std::string> kv;
            for (const auto& [k, val] : v.attr) kv.push_back(k + "=" + val);
            b.fields.emplace_back("attributes", join(kv, "; "));
          }
        } else if constexpr (std::is_same_v<T, ChunkNode>) {
          b.fields.emplace_back("text", v.content);
        } else if constexpr (std::is_same_v<T, DocumentNode>) {
          b.fields.emplace_back("title", v.title);
        } else if constexpr (std::is_same_v<T, AssertionNode>) {
          b.fields.emplace_back("desc", v.desc);
        } else {
          if (!v.caption.empty()) b.fields.emplace_back("caption", v.caption);
          b.fields.emplace_back("content", v.content);
          if (!v.desc.empty()) b.fields.emplace_back("desc", v.desc);
        }
      },
      *n);
  return b;
}

std::string render_block(const std::string& tag, const ContextBlock& b) {
  std::string out = "(" + tag + ") " + std::string(node_type_name(b.type));
  if (b.type == NodeType::kEntity) {
    out += ": " + b.name;
    if (!b.entity_type.empty()) out += " [" + b.entity_type + "]";
  }
  out += "\n";
  for (const auto& [label, text] : b.fields) {
    out += "    " + label + ": " + replace_all(text, "\n", "\n      ") + "\n";
  }
  return out;
}

}  // namespace

std::vector<NodeId> TraceContext::entity_order() const {
  std::vector<NodeId> out;
  auto see = [&](const NodeId& id) {
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  };
  for (const auto& b : path_blocks) {
    if (b.type == NodeType::kEntity) see(b.id);
  }
  for (const auto& r : relations) {
    see(r.head);
    see(r.tail);
  }
  for (const auto& b : augment_blocks) {
    if (b.type == NodeType::kEntity) see(b.id);
  }
  return out;
}

std::string TraceContext::render() const {
  std::string out;
  if (!path_blocks.empty()) {
    out += "[Path]\n";
    for (std::size_t i = 0; i < path_blocks.size(); ++i) {
      out += render_block(std::to_string(i + 1), path_blocks[i]);
    }
  }
  if (!relations.empty()) {
    out += "[Relations]\n";
    for (const auto& r : relations) {
      out += r.head_name + " -" + r.relation + "-> " + r.tail_name;
      if (!r.desc.empty()) out += " : " + r.desc;
      out += "\n";
    }
  }
  if (!augment_blocks.empty()) {
    out += "[Neighbours]\n";
    for (std::size_t i = 0; i < augment_blocks.size(); ++i) {
      out += render_block("n" + std::to_string(i + 1), augment_blocks[i]);
    }
  }
  return out;
}

TraceContext format_trace(const Trace& trace, const KnowledgeGraph& g) {
  TraceContext ctx;
  std::set<NodeId> members;
  for (const NodeId& id : trace.path_nodes) {
    ctx.path_blocks.push_back(make_block(g, id));
    members.insert(id);
  }
  for (const NodeId& id : trace.augment_nodes) {
    ctx.augment_blocks.push_back(make_block(g, id));
    members.insert(id);
  }
  for (const Edge& e : trace.path_edges) {
    if (!g.contains(e.src) || !g.contains(e.dst)) {
      throw DanglingTrace("trace edge " + edge_key(e) + " is not in the graph");
    }
  }

  std::vector<NodeId> assertions;
  for (const Edge& e : trace.path_edges) {
    if (e.assertion_id) assertions.push_back(*e.assertion_id);
  }
  for (const NodeId& id : trace.path_nodes) {
    if (!g.get<EntityNode>(id)) continue;
    for (const Edge& e : g.out_edges(id)) {
      if (e.assertion_id && members.count(e.dst) &&
          std::find(assertions.begin(), assertions.end(), *e.assertion_id) == assertions.end()) {
        assertions.push_back(*e.assertion_id);
      }
    }
  }
  for (const NodeId& id : trace.augment_nodes) {
    if (!g.get<EntityNode>(id)) continue;
    for (const Edge& e : g.out_edges(id)) {
      if (e.assertion_id && members.count(e.dst) &&
          std::find(assertions.begin(), assertions.end(), *e.assertion_id) == assertions.end()) {
        assertions.push_back(*e.assertion_id);
      }
    }
  }
  for (const NodeId& aid : assertions) {
    const auto* a = g.get<AssertionNode>(aid);
    if (!a) throw DanglingTrace("assertion '" + aid.value + "' is not in the graph");
    const auto* h = g.get<EntityNode>(a->head);
    const auto* t = g.get<EntityNode>(a->tail);
    if (!h || !t) throw DanglingTrace("assertion '" + aid.value + "' has a dangling endpoint");
    ctx.relations.push_back({a->head, a->tail, h->name, a->relation, t->name, a->desc});
  }
  return ctx;
}

Fuzzified fuzzify_entities(const TraceContext& context, const Schema& schema) {
  Fuzzified out{context, {}};
  auto collect = [&](const ContextBlock& b) {
    if (b.type != NodeType::kEntity || b.name.empty()) return;
    std::string placeholder = schema.placeholder_for(b.entity_type);
    if (!placeholder.empty()) out.replacements.emplace(b.name, placeholder);
  };
  for (const auto& b : context.path_blocks) collect(b);
  for (const auto& b : context.augment_blocks) collect(b);
  if (out.replacements.empty()) return out;

  std::vector<std::pair<std::string, std::string>> order(out.replacements.begin(),
                                                         out.replacements.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.first.size() > b.first.size();
  });
  // Two passes through private markers so a placeholder that contains another
  // entity's name is never rewritten.
  std::vector<std::pair<std::string, std::string>> to_marker, from_marker;
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::string marker = "\x1f" + std::to_string(i) + "\x1f";
    to_marker.emplace_back(order[i].first, marker);
    from_marker.emplace_back(marker, order[i].second);
  }
  auto apply = [&](std::string& s) {
    for (const auto& [from, to] : to_marker) s = replace_all(s, from, to);
    for (const auto& [from, to] : from_marker) s = replace_all(s, from, to);
  };
  for (auto* blocks : {&out.context.path_blocks, &out.context.augment_blocks}) {
    for (auto& b : *blocks) {
      apply(b.name);
      for (auto& f : b.fields) apply(f.second);
    }
  }
  for (auto& r : out.context.relations) {
    apply(r.head_name);
    apply(r.tail_name);
    apply(r.desc);
  }
  return out;
}

TraceContext substitute_pronouns(const TraceContext& context) {
  TraceContext out = context;
  std::map<NodeId, std::string> token;
  std::map<NodeId, std::string> names;
  for (const NodeId& id : context.entity_order()) {
    token[id] = "E" + std::to_string(token.size() + 1);
  }
  for (const auto* blocks : {&context.path_blocks, &context.augment_blocks}) {
    for (const auto& b : *blocks) {
      if (b.type == NodeType::kEntity) names[b.id] = b.name;
    }
  }
  for (const auto& r : context.relations) {
    names.emplace(r.head, r.head_name);
    names.emplace(r.tail, r.tail_name);
  }
  // Names shared by several entities (e.g. after fuzzification) stay as they
  // are inside free text; there is no single token to give them.
  std::map<std::string, int> holders;
  for (const auto& [id, name] : names) ++holders[name];
  std::vector<std::pair<std::string, std::string>> name_to_token;
  for (const auto& [id, name] : names) {
    if (!name.empty() && holders[name] == 1) name_to_token.emplace_back(name, token[id]);
  }
  std::stable_sort(name_to_token.begin(), name_to_token.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });

  for (auto& r : out.relations) {
    r.head_name = token[r.head];
    r.tail_name = token[r.tail];
    for (const auto& [from, to] : name_to_token) r.desc = replace_all(r.desc, from, to);
  }
  for (auto* blocks : {&out.path_blocks, &out.augment_blocks}) {
    for (auto& b : *blocks) {
      if (b.type != NodeType::kEntity) continue;
      const std::string& t = token[b.id];
      std::string legend;
      for (const auto& [label, text] : b.fields) {
        if (label == "desc") legend = text;
      }
      for (const auto& [from, to] : name_to_token) legend = replace_all(legend, from, to);
      std::vector<std::pair<std::string, std::string>> fields;
      fields.emplace_back("legend", t + " = " + legend);
      for (const auto& f : b.fields) {
        if (f.first != "desc") fields.push_back(f);
      }
      b.fields = std::move(fields);
      b.name = t;
    }
  }
  return out;
}

}  // namespace kgsynth
