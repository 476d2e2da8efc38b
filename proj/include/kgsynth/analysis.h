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

#ifndef KGSYNTH_ANALYSIS_H_
#define KGSYNTH_ANALYSIS_H_

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "kgsynth/graph.h"
#include "kgsynth/sampling.h"
#include "kgsynth/synthesis.h"

namespace kgsynth {

// Bins in display order.
struct Histogram {
  std::string dimension;
  std::vector<std::pair<std::string, std::size_t>> bins;

  std::size_t total() const;
  std::size_t count(std::string_view bin) const;
  bool operator==(const Histogram&) const = default;
};

// The seven dimensions, in report order.
inline constexpr std::array<std::string_view, 7> kStatsDimensions = {
    "token_len", "task_type", "domain", "difficulty", "complexity", "support", "hop_num"};

struct StatsReport {
  std::size_t total = 0;
  // Lower bounds of the token_len buckets; the last bucket is open.
  std::vector<std::size_t> token_len_bounds;
  std::vector<Histogram> histograms;
  // Skip and error counters carried over from earlier stages.
  std::map<std::string, std::size_t> counters;

  const Histogram& histogram(std::string_view dimension) const;
  // Supported / scored records; 0 when nothing was scored.
  double support_ratio() const;
  bool operator==(const StatsReport&) const = default;
};

using Tokenizer = std::function<std::size_t(std::string_view)>;
std::size_t whitespace_tokens(std::string_view text);

inline const std::vector<std::size_t> kTokenLenBounds = {0, 32, 64, 128, 256};

StatsReport compute_stats(const std::vector<QARecord>& records,
                          const Tokenizer& tokenizer = whitespace_tokens,
                          std::map<std::string, std::size_t> counters = {});

// hop_num histogram computed from traces (path edge counts).
Histogram hop_histogram(const std::vector<Trace>& traces);

struct GraphStats {
  std::map<NodeType, std::size_t> nodes;
  std::map<EdgeKind, std::size_t> edges;
  std::size_t node_total() const;
  std::size_t edge_total() const;
};

GraphStats compute_graph_stats(const KnowledgeGraph& graph);
nlohmann::ordered_json graph_stats_to_json(const GraphStats& s);

nlohmann::ordered_json stats_to_json(const StatsReport& s);
// Throws FormatError.
StatsReport stats_from_json(const nlohmann::json& j);

// format: "plain_text" or "structured". Throws UnknownFormat.
std::string render_report(const StatsReport& stats, std::string_view format);

}  // namespace kgsynth

#endif  // KGSYNTH_ANALYSIS_H_
