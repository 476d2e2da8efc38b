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

#include "kgsynth/sampling.h"

#include <algorithm>
#include <deque>
#include <functional>

#include "kgsynth/errors.h"
#include "kgsynth/rng.h"

namespace kgsynth {

using nlohmann::json;

SamplingGraph::SamplingGraph(std::vector<NodeInfo> nodes, const std::vector<Edge>& edges)
    : nodes_(std::move(nodes)) {
  std::sort(nodes_.begin(), nodes_.end(),
            [](const NodeInfo& a, const NodeInfo& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i].id, i).second) {
      throw DuplicateId("sampling graph node '" + nodes_[i].id.value + "' repeated");
    }
  }
  std::vector<Edge> sorted = edges;
  std::sort(sorted.begin(), sorted.end());
  adj_.assign(nodes_.size(), {});
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Edge& e : sorted) {
    auto a = index_.find(e.src), b = index_.find(e.dst);
    if (a == index_.end() || b == index_.end() || a->second == b->second) continue;
    auto key = std::minmax(a->second, b->second);
    if (!seen.insert(key).second) continue;
    edges_.push_back(e);
    adj_[a->second].push_back({b->second, edges_.size() - 1});
    adj_[b->second].push_back({a->second, edges_.size() - 1});
  }
  for (auto& list : adj_) {
    std::sort(list.begin(), list.end(), [](const Link& x, const Link& y) { return x.to < y.to; });
  }
}

SamplingGraph SamplingGraph::from_graph(const KnowledgeGraph& g, const std::set<NodeType>& types) {
  std::vector<NodeInfo> nodes;
  for (const NodeId& id : g.node_ids()) {
    const Node& n = g.at(id);
    if (!types.count(node_type(n))) continue;
    NodeInfo info{id, node_type(n), {}, {}};
    if (const auto* e = std::get_if<EntityNode>(&n)) {
      info.attributes = e->attr;
      info.attributes["type"] = e->type_name;
      info.attributes["name"] = e->name;
      info.labels = e->labels;
    }
    nodes.push_back(std::move(info));
  }
  return SamplingGraph(std::move(nodes), g.edges());
}

SamplingGraph SamplingGraph::from_graph(const KnowledgeGraph& g) {
  return from_graph(g, {NodeType::kChunk, NodeType::kEntity, NodeType::kImage, NodeType::kTable,
                        NodeType::kFormula});
}

std::optional<std::size_t> SamplingGraph::index_of(const NodeId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> SamplingGraph::edge_between(std::size_t i, std::size_t j) const {
  const auto& list = adj_[i];
  auto it = std::lower_bound(list.begin(), list.end(), j,
                             [](const Link& l, std::size_t v) { return l.to < v; });
  if (it == list.end() || it->to != j) return std::nullopt;
  return it->edge;
}

SamplingGraph SamplingGraph::induced(const std::vector<std::size_t>& keep) const {
  std::vector<NodeInfo> nodes;
  std::set<NodeId> ids;
  for (std::size_t i : keep) {
    if (ids.insert(nodes_[i].id).second) nodes.push_back(nodes_[i]);
  }
  std::vector<Edge> edges;
  for (const Edge& e : edges_) {
    if (ids.count(e.src) && ids.count(e.dst)) edges.push_back(e);
  }
  return SamplingGraph(std::move(nodes), edges);
}

bool passes_filters(const SamplingGraph::NodeInfo& n, const AttributeFilters& filters) {
  if (n.type != NodeType::kEntity) return true;
  for (const auto& [key, want] : filters) {
    if (key == "label") {
      if (!n.labels.count(want)) return false;
      continue;
    }
    auto it = n.attributes.find(key);
    if (it == n.attributes.end() || it->second != want) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Augmented chain sampling.

namespace {

std::vector<std::size_t> bfs_distances(const SamplingGraph& g, std::size_t from) {
  constexpr std::size_t kUnreached = static_cast<std::size_t>(-1);
  std::vector<std::size_t> dist(g.size(), kUnreached);
  std::deque<std::size_t> queue{from};
  dist[from] = 0;
  while (!queue.empty()) {
    std::size_t u = queue.front();
    queue.pop_front();
    for (const auto& l : g.neighbors(u)) {
      if (dist[l.to] == kUnreached) {
        dist[l.to] = dist[u] + 1;
        queue.push_back(l.to);
      }
    }
  }
  return dist;
}

std::vector<Edge> induced_edges(const SamplingGraph& g, const std::vector<std::size_t>& nodes) {
  std::vector<bool> in(g.size(), false);
  for (std::size_t i : nodes) in[i] = true;
  std::vector<Edge> out;
  for (std::size_t i = 0; i < g.edges().size(); ++i) {
    const Edge& e = g.edges()[i];
    if (in[*g.index_of(e.src)] && in[*g.index_of(e.dst)]) out.push_back(e);
  }
  return out;
}

}  // namespace

Subgraph augmented_chain_sample(const SamplingGraph& g, std::size_t k, std::uint64_t seed,
                                std::size_t retry_budget) {
  if (g.empty()) throw EmptyGraph("cannot sample from an empty graph");
  if (k < 1) throw ConfigError("subgraph size k must be >= 1");
  constexpr std::size_t kUnreached = static_cast<std::size_t>(-1);
  Rng rng(seed);
  auto ids_of = [&](const std::vector<std::size_t>& v) {
    std::vector<NodeId> out;
    for (std::size_t i : v) out.push_back(g.node(i).id);
    return out;
  };

  if (g.size() == 1) {
    return {{g.node(0).id}, {g.node(0).id}, {}};
  }
  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(retry_budget, 1); ++attempt) {
    const std::size_t start = rng.uniform_index(g.size());
    std::vector<std::size_t> dist = bfs_distances(g, start);
    std::vector<std::size_t> reach;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (dist[i] != kUnreached && dist[i] > 0) reach.push_back(i);
    }
    if (reach.empty()) continue;  // isolated start: no partner, try again

    // End node: uniform over the top quartile of BFS distances.
    std::vector<std::size_t> ds;
    for (std::size_t i : reach) ds.push_back(dist[i]);
    std::sort(ds.rbegin(), ds.rend());
    const std::size_t cut = ds[(ds.size() + 3) / 4 - 1];
    std::vector<std::size_t> far;
    for (std::size_t i : reach) {
      if (dist[i] >= cut) far.push_back(i);
    }
    const std::size_t end = far[rng.uniform_index(far.size())];

    // Shortest path start -> end, ties to the smallest next id.
    std::vector<std::size_t> to_end = bfs_distances(g, end);
    std::vector<std::size_t> backbone{start};
    while (backbone.back() != end) {
      std::size_t u = backbone.back();
      for (const auto& l : g.neighbors(u)) {
        if (to_end[l.to] + 1 == to_end[u]) {
          backbone.push_back(l.to);
          break;
        }
      }
    }
    if (backbone.size() > k) backbone.resize(k);

    std::vector<std::size_t> chosen;
    if (reach.size() + 1 <= k) {
      // The budget covers the whole component.
      chosen = backbone;
      std::vector<bool> in(g.size(), false);
      for (std::size_t i : chosen) in[i] = true;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (dist[i] != kUnreached && !in[i]) chosen.push_back(i);
      }
    } else {
      chosen = backbone;
      std::vector<bool> in(g.size(), false);
      for (std::size_t i : chosen) in[i] = true;
      for (std::size_t b : backbone) {
        if (chosen.size() >= k) break;
        std::vector<std::size_t> fresh;
        for (const auto& l : g.neighbors(b)) {
          if (!in[l.to]) fresh.push_back(l.to);
        }
        std::size_t m = std::min<std::size_t>(
            {static_cast<std::size_t>(rng.uniform_int(1, 2)), fresh.size(), k - chosen.size()});
        for (std::size_t v : rng.sample(fresh, m)) {
          in[v] = true;
          chosen.push_back(v);
        }
      }
    }
    return {ids_of(chosen), ids_of(backbone), induced_edges(g, chosen)};
  }
  throw NoBackboneFound("no connected node pair found in " + std::to_string(retry_budget) +
                        " attempts");
}

// ---------------------------------------------------------------------------
// Trace generation.

std::map<NodeType, std::size_t> count_types(const SamplingGraph& g,
                                            const std::vector<std::size_t>& nodes) {
  std::map<NodeType, std::size_t> out;
  for (std::size_t i : nodes) ++out[g.node(i).type];
  return out;
}

bool window_satisfied(const TaskConfig& task, const std::map<NodeType, std::size_t>& counts) {
  for (NodeType t : kAllNodeTypes) {
    auto it = counts.find(t);
    if (!task.range_for(t).admits(it == counts.end() ? 0 : it->second)) return false;
  }
  return true;
}

bool is_valid_start(const SamplingGraph& g, std::size_t i, const TaskConfig& task) {
  const auto& sc = task.start_criteria;
  const auto& n = g.node(i);
  if (!sc.node_types.empty() &&
      std::find(sc.node_types.begin(), sc.node_types.end(), n.type) == sc.node_types.end()) {
    return false;
  }
  if (g.degree(i) < sc.min_out_degree) return false;
  auto max = task.range_for(n.type).max;
  if (max && *max < 1) return false;
  return passes_filters(n, sc.attribute_filters);
}

bool is_valid_step(const SamplingGraph& g, std::size_t from, std::size_t to,
                   const TaskConfig& task) {
  const auto& nc = task.neighbor_constraints;
  auto e = g.edge_between(from, to);
  if (!e) return false;
  if (!nc.allowed_kinds.empty() &&
      std::find(nc.allowed_kinds.begin(), nc.allowed_kinds.end(), g.edges()[*e].kind) ==
          nc.allowed_kinds.end()) {
    return false;
  }
  if (g.degree(to) < nc.min_degree) return false;
  if (nc.max_degree && g.degree(to) > *nc.max_degree) return false;
  return passes_filters(g.node(to), nc.attribute_filters);
}

std::vector<std::size_t> augment_for_path(const SamplingGraph& g,
                                          const std::vector<std::size_t>& path,
                                          const TaskConfig& task) {
  std::vector<std::size_t> out;
  std::size_t total = path.size();
  if (total >= task.max_nodes) return out;
  std::vector<bool> taken(g.size(), false);
  for (std::size_t p : path) taken[p] = true;
  auto counts = count_types(g, path);
  std::set<std::size_t> candidates;
  for (std::size_t p : path) {
    for (const auto& l : g.neighbors(p)) {
      if (!taken[l.to]) candidates.insert(l.to);
    }
  }
  for (std::size_t c : candidates) {
    if (total >= task.max_nodes) break;
    auto max = task.range_for(g.node(c).type).max;
    if (max && counts[g.node(c).type] + 1 > *max) continue;
    bool reachable = false;
    for (std::size_t p : path) {
      if (is_valid_step(g, p, c, task)) {
        reachable = true;
        break;
      }
    }
    if (!reachable) continue;
    out.push_back(c);
    ++counts[g.node(c).type];
    ++total;
  }
  return out;
}

namespace {

struct TraceSearch {
  const SamplingGraph& g;
  const TaskConfig& task;
  Rng& rng;
  std::size_t budget;
  std::vector<std::size_t> path;
  std::vector<bool> on_path;
  std::map<NodeType, std::size_t> counts;
  std::vector<std::size_t> augment;

  bool run() {
    if (budget == 0) return false;
    --budget;
    std::vector<std::size_t> next;
    const bool at_limit = path.size() >= task.max_nodes || path.size() - 1 >= task.max_depth;
    if (!at_limit) {
      for (const auto& l : g.neighbors(path.back())) {
        if (on_path[l.to] || !is_valid_step(g, path.back(), l.to, task)) continue;
        auto max = task.range_for(g.node(l.to).type).max;
        if (max && counts[g.node(l.to).type] + 1 > *max) continue;
        next.push_back(l.to);
      }
    }
    if (next.empty()) {
      augment = augment_for_path(g, path, task);
      auto all = counts;
      for (std::size_t a : augment) ++all[g.node(a).type];
      return window_satisfied(task, all);
    }
    rng.shuffle(next);
    for (std::size_t v : next) {
      path.push_back(v);
      on_path[v] = true;
      ++counts[g.node(v).type];
      if (run()) return true;
      --counts[g.node(v).type];
      on_path[v] = false;
      path.pop_back();
      if (budget == 0) return false;
    }
    return false;
  }
};

}  // namespace

Trace generate_trace(const SamplingGraph& g, const TaskConfig& task, std::uint64_t seed,
                     const TraceSearchLimits& limits) {
  if (g.empty()) throw NoValidTrace("empty subgraph");
  Rng rng(seed);
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (is_valid_start(g, i, task)) starts.push_back(i);
  }
  rng.shuffle(starts);
  if (starts.size() > limits.max_starts) starts.resize(limits.max_starts);
  for (std::size_t s : starts) {
    TraceSearch search{g, task, rng, limits.expansion_budget, {s}, std::vector<bool>(g.size(), false),
                       {}, {}};
    search.on_path[s] = true;
    search.counts[g.node(s).type] = 1;
    if (!search.run()) continue;
    Trace t;
    t.task_name = task.task_name;
    for (std::size_t i : search.path) t.path_nodes.push_back(g.node(i).id);
    for (std::size_t i = 0; i + 1 < search.path.size(); ++i) {
      t.path_edges.push_back(g.edges()[*g.edge_between(search.path[i], search.path[i + 1])]);
    }
    for (std::size_t i : search.augment) t.augment_nodes.push_back(g.node(i).id);
    t.hop_num = t.path_edges.size();
    return t;
  }
  throw NoValidTrace("task '" + task.task_name + "' has no valid trace in this subgraph");
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

nlohmann::ordered_json edge_json(const Edge& e) {
  nlohmann::ordered_json j = {{"src", e.src.value}, {"dst", e.dst.value}, {"kind", edge_kind_name(e.kind)}};
  if (e.assertion_id) j["assertion_id"] = e.assertion_id->value;
  return j;
}

Edge edge_from(const json& j) {
  auto kind = parse_edge_kind(j.at("kind").get<std::string>());
  if (!kind) throw FormatError("unknown edge kind", "kind");
  Edge e{NodeId(j.at("src").get<std::string>()), NodeId(j.at("dst").get<std::string>()), *kind,
         std::nullopt};
  if (j.contains("assertion_id") && j["assertion_id"].is_string()) {
    e.assertion_id = NodeId(j["assertion_id"].get<std::string>());
  }
  return e;
}

}  // namespace

nlohmann::ordered_json trace_to_json(const Trace& t) {
  nlohmann::ordered_json j;
  j["task_name"] = t.task_name;
  j["hop_num"] = t.hop_num;
  j["path_nodes"] = nlohmann::ordered_json::array();
  for (const NodeId& id : t.path_nodes) j["path_nodes"].push_back(id.value);
  j["path_edges"] = nlohmann::ordered_json::array();
  for (const Edge& e : t.path_edges) j["path_edges"].push_back(edge_json(e));
  j["augment_nodes"] = nlohmann::ordered_json::array();
  for (const NodeId& id : t.augment_nodes) j["augment_nodes"].push_back(id.value);
  return j;
}

Trace trace_from_json(const json& j) {
  try {
    Trace t;
    t.task_name = j.at("task_name").get<std::string>();
    t.hop_num = j.at("hop_num").get<std::size_t>();
    for (const json& v : j.at("path_nodes")) t.path_nodes.emplace_back(v.get<std::string>());
    for (const json& v : j.at("path_edges")) t.path_edges.push_back(edge_from(v));
    for (const json& v : j.at("augment_nodes")) t.augment_nodes.emplace_back(v.get<std::string>());
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad trace record: ") + e.what(), "");
  }
}

}  // namespace kgsynth
