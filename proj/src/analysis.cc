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

#include "kgsynth/analysis.h"

#include <algorithm>
#include <cstdio>
#include <set>

#include "kgsynth/errors.h"
#include "kgsynth/text.h"

namespace kgsynth {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kUnscored = "unscored";

std::string bucket_label(const std::vector<std::size_t>& bounds, std::size_t i) {
  if (i + 1 < bounds.size()) {
    return "[" + std::to_string(bounds[i]) + "," + std::to_string(bounds[i + 1]) + ")";
  }
  return "[" + std::to_string(bounds[i]) + ",inf)";
}

void bump(Histogram& h, const std::string& bin) {
  for (auto& [b, n] : h.bins) {
    if (b == bin) {
      ++n;
      return;
    }
  }
  h.bins.emplace_back(bin, 1);
}

// Sorted map -> bins, numeric keys in numeric order.
Histogram from_counts(std::string dim, const std::map<std::string, std::size_t>& counts) {
  Histogram h{std::move(dim), {}};
  for (const auto& [k, n] : counts) h.bins.emplace_back(k, n);
  return h;
}

Histogram from_numeric(std::string dim, const std::map<std::size_t, std::size_t>& counts) {
  Histogram h{std::move(dim), {}};
  for (const auto& [k, n] : counts) h.bins.emplace_back(std::to_string(k), n);
  return h;
}

}  // namespace

std::size_t Histogram::total() const {
  std::size_t t = 0;
  for (const auto& [b, n] : bins) t += n;
  return t;
}

std::size_t Histogram::count(std::string_view bin) const {
  for (const auto& [b, n] : bins) {
    if (b == bin) return n;
  }
  return 0;
}

const Histogram& StatsReport::histogram(std::string_view dimension) const {
  for (const auto& h : histograms) {
    if (h.dimension == dimension) return h;
  }
  throw UnknownFormat("report has no dimension '" + std::string(dimension) + "'");
}

double StatsReport::support_ratio() const {
  const Histogram& h = histogram("support");
  std::size_t yes = h.count("supported"), no = h.count("unsupported");
  return yes + no == 0 ? 0.0 : static_cast<double>(yes) / static_cast<double>(yes + no);
}

std::size_t whitespace_tokens(std::string_view text) { return split_whitespace(text).size(); }

StatsReport compute_stats(const std::vector<QARecord>& records, const Tokenizer& tokenizer,
                          std::map<std::string, std::size_t> counters) {
  StatsReport s;
  s.total = records.size();
  s.token_len_bounds = kTokenLenBounds;
  s.counters = std::move(counters);

  Histogram tok{"token_len", {}};
  for (std::size_t i = 0; i < s.token_len_bounds.size(); ++i) {
    tok.bins.emplace_back(bucket_label(s.token_len_bounds, i), 0);
  }
  std::map<std::string, std::size_t> task, domain;
  std::map<std::size_t, std::size_t> hops, complexity;
  Histogram diff{"difficulty", {{"simple", 0}, {"medium", 0}, {"hard", 0}, {std::string(kUnscored), 0}}};
  Histogram support{"support", {{"supported", 0}, {"unsupported", 0}, {std::string(kUnscored), 0}}};
  std::size_t complexity_unscored = 0;

  for (const QARecord& r : records) {
    std::size_t len = tokenizer(r.question);
    std::size_t b = 0;
    while (b + 1 < s.token_len_bounds.size() && len >= s.token_len_bounds[b + 1]) ++b;
    ++tok.bins[b].second;
    ++task[r.task_name];
    ++domain[r.domain];
    ++hops[r.hop_num];
    if (r.scores.difficulty) {
      bump(diff, std::string(difficulty_name(*r.scores.difficulty)));
    } else {
      bump(diff, std::string(kUnscored));
    }
    if (r.scores.complexity) {
      ++complexity[static_cast<std::size_t>(std::max(0, *r.scores.complexity))];
    } else {
      ++complexity_unscored;
    }
    if (r.scores.support) {
      bump(support, *r.scores.support ? "supported" : "unsupported");
    } else {
      bump(support, std::string(kUnscored));
    }
  }
  Histogram cx{"complexity", {}};
  for (std::size_t v = 1; v <= 5; ++v) cx.bins.emplace_back(std::to_string(v), 0);
  for (const auto& [v, n] : complexity) {
    bool placed = false;
    for (auto& [b, c] : cx.bins) {
      if (b == std::to_string(v)) {
        c += n;
        placed = true;
      }
    }
    if (!placed) cx.bins.emplace_back(std::to_string(v), n);
  }
  cx.bins.emplace_back(std::string(kUnscored), complexity_unscored);

  s.histograms.push_back(std::move(tok));
  s.histograms.push_back(from_counts("task_type", task));
  s.histograms.push_back(from_counts("domain", domain));
  s.histograms.push_back(std::move(diff));
  s.histograms.push_back(std::move(cx));
  s.histograms.push_back(std::move(support));
  s.histograms.push_back(from_numeric("hop_num", hops));
  return s;
}

Histogram hop_histogram(const std::vector<Trace>& traces) {
  std::map<std::size_t, std::size_t> hops;
  for (const Trace& t : traces) ++hops[t.path_edges.size()];
  return from_numeric("hop_num", hops);
}

std::size_t GraphStats::node_total() const {
  std::size_t t = 0;
  for (const auto& [k, n] : nodes) t += n;
  return t;
}

std::size_t GraphStats::edge_total() const {
  std::size_t t = 0;
  for (const auto& [k, n] : edges) t += n;
  return t;
}

GraphStats compute_graph_stats(const KnowledgeGraph& graph) {
  GraphStats s;
  for (NodeType t : kAllNodeTypes) s.nodes[t] = 0;
  for (EdgeKind k : kAllEdgeKinds) s.edges[k] = 0;
  for (const NodeId& id : graph.node_ids()) ++s.nodes[node_type(graph.at(id))];
  for (const Edge& e : graph.edges()) ++s.edges[e.kind];
  return s;
}

ordered_json graph_stats_to_json(const GraphStats& s) {
  ordered_json j;
  j["node_total"] = s.node_total();
  j["edge_total"] = s.edge_total();
  ordered_json nodes, edges;
  for (NodeType t : kAllNodeTypes) nodes[std::string(node_type_name(t))] = s.nodes.at(t);
  for (EdgeKind k : kAllEdgeKinds) edges[edge_kind_name(k)] = s.edges.at(k);
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  return j;
}

ordered_json stats_to_json(const StatsReport& s) {
  ordered_json j;
  j["total"] = s.total;
  j["token_len_bounds"] = s.token_len_bounds;
  ordered_json dims;
  for (const Histogram& h : s.histograms) {
    ordered_json bins = ordered_json::array();
    for (const auto& [b, n] : h.bins) bins.push_back(ordered_json::array({b, n}));
    dims[h.dimension] = std::move(bins);
  }
  j["dimensions"] = std::move(dims);
  const Histogram& sup = s.histogram("support");
  ordered_json support;
  support["supported"] = sup.count("supported");
  support["scored"] = sup.count("supported") + sup.count("unsupported");
  support["ratio"] = s.support_ratio();
  j["support_summary"] = std::move(support);
  ordered_json counters = ordered_json::object();
  for (const auto& [k, v] : s.counters) counters[k] = v;
  j["counters"] = std::move(counters);
  return j;
}

StatsReport stats_from_json(const json& j) {
  try {
    StatsReport s;
    s.total = j.at("total").get<std::size_t>();
    s.token_len_bounds = j.at("token_len_bounds").get<std::vector<std::size_t>>();
    const json& dims = j.at("dimensions");
    for (std::string_view name : kStatsDimensions) {
      Histogram h{std::string(name), {}};
      for (const json& bin : dims.at(std::string(name))) {
        h.bins.emplace_back(bin.at(0).get<std::string>(), bin.at(1).get<std::size_t>());
      }
      s.histograms.push_back(std::move(h));
    }
    if (j.contains("counters")) {
      s.counters = j.at("counters").get<std::map<std::string, std::size_t>>();
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad stats report: ") + e.what(), "");
  }
}

std::string render_report(const StatsReport& stats, std::string_view format) {
  if (format == "structured") return stats_to_json(stats).dump(2) + "\n";
  if (format != "plain_text") {
    throw UnknownFormat("report format '" + std::string(format) +
                        "' (expected plain_text or structured)");
  }
  std::string out = "Dataset statistics: " + std::to_string(stats.total) + " records\n";
  for (const Histogram& h : stats.histograms) {
    std::size_t width = h.dimension.size();
    for (const auto& [b, n] : h.bins) width = std::max(width, b.size());
    out += "\n" + h.dimension + "\n";
    for (const auto& [b, n] : h.bins) {
      char pct[32];
      double p = stats.total ? 100.0 * static_cast<double>(n) / static_cast<double>(stats.total) : 0.0;
      std::snprintf(pct, sizeof pct, "%6.1f%%", p);
      out += "  " + b + std::string(width - b.size() + 2, ' ');
      std::string count = std::to_string(n);
      out += std::string(count.size() < 8 ? 8 - count.size() : 0, ' ') + count + "  " + pct + "\n";
    }
  }
  char ratio[32];
  std::snprintf(ratio, sizeof ratio, "%.4f", stats.support_ratio());
  out += "\nsupport ratio (supported / scored): " + std::string(ratio) + "\n";
  if (!stats.counters.empty()) {
    out += "\ncounters\n";
    std::size_t width = 0;
    for (const auto& [k, v] : stats.counters) width = std::max(width, k.size());
    for (const auto& [k, v] : stats.counters) {
      out += "  " + k + std::string(width - k.size() + 2, ' ') + std::to_string(v) + "\n";
    }
  }
  return out;
}

}  // namespace kgsynth
