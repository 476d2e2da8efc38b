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

#include "kgsynth/pipeline.h"

#include <chrono>
#include <filesystem>
#include <set>
#include <string>
#include <type_traits>

#include "kgsynth/analysis.h"
#include "kgsynth/errors.h"
#include "kgsynth/hash.h"
#include "kgsynth/http_provider.h"
#include "kgsynth/mock_provider.h"
#include "kgsynth/parallel.h"
#include "kgsynth/sampling.h"
#include "kgsynth/storage.h"
#include "kgsynth/synthesis.h"
#include "kgsynth/text.h"
#include "kgsynth/validate.h"

namespace kgsynth {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// --- config access --------------------------------------------------------

const json* find_key(const json& doc, const std::string& dotted) {
  const json* cur = &doc;
  std::size_t pos = 0;
  while (true) {
    std::size_t dot = dotted.find('.', pos);
    std::string part = dotted.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(part);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    if (dot == std::string::npos) return cur;
    pos = dot + 1;
  }
}

template <class T>
T get_or(const json& doc, const std::string& key, T fallback) {
  const json* v = find_key(doc, key);
  if (!v || v->is_null()) return fallback;
  // nlohmann casts -1 to size_t and 2.5 to int without complaint.
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    if (!v->is_number_integer() || (std::is_unsigned_v<T> && !v->is_number_unsigned())) {
      throw ConfigError(key + ": expected " +
                        (std::is_unsigned_v<T> ? "a non-negative integer" : "an integer") +
                        ", got " + v->dump());
    }
  }
  try {
    return v->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key + ": unexpected value " + v->dump());
  }
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_absolute() || base.empty()) return path.lexically_normal().string();
  return (fs::path(base) / path).lexically_normal().string();
}

EndpointSpec endpoint_from(const json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError(key + ": expected an endpoint object");
  EndpointSpec e;
  e.base_url = get_or<std::string>(j, "base_url", "");
  e.model = get_or<std::string>(j, "model", "");
  e.auth_env = get_or<std::string>(j, "auth_env", "");
  if (e.model.empty()) throw ConfigError(key + ".model: required");
  return e;
}

std::vector<EndpointSpec> endpoints_from(const json& doc, const std::string& key) {
  const json* v = find_key(doc, key);
  if (!v || v->is_null()) return {};
  std::vector<EndpointSpec> out;
  if (v->is_object()) {
    out.push_back(endpoint_from(*v, key));
  } else if (v->is_array()) {
    for (std::size_t i = 0; i < v->size(); ++i) {
      out.push_back(endpoint_from((*v)[i], key + "." + std::to_string(i)));
    }
  } else {
    throw ConfigError(key + ": expected an endpoint or a list of endpoints");
  }
  return out;
}

// --- files ----------------------------------------------------------------

void write_json(const std::string& path, const ordered_json& j) {
  write_file(path, j.dump(2) + "\n");
}

ordered_json read_counters(const PipelineConfig& c) {
  std::string p = c.out(c.outputs.counters);
  if (!fs::exists(p)) return ordered_json::object();
  ordered_json j = ordered_json::parse(read_file(p), nullptr, false);
  return j.is_object() ? j : ordered_json::object();
}

// Stages always appear in pipeline order so the file does not depend on the
// order commands were run in.
void store_counters(const PipelineConfig& c, const std::string& stage, const ordered_json& v) {
  static const std::vector<std::string> order = {"build", "sample", "generate", "filter"};
  ordered_json cur = read_counters(c);
  cur[stage] = v;
  ordered_json out = ordered_json::object();
  for (const auto& s : order) {
    if (cur.contains(s)) out[s] = cur[s];
  }
  write_json(c.out(c.outputs.counters), out);
}

std::map<std::string, std::size_t> flat_counters(const ordered_json& j) {
  std::map<std::string, std::size_t> out;
  for (const auto& [stage, vals] : j.items()) {
    if (!vals.is_object()) continue;
    for (const auto& [k, v] : vals.items()) {
      if (v.is_number_unsigned()) out[stage + "." + k] = v.get<std::size_t>();
    }
  }
  return out;
}

std::map<std::string, TaskConfig> task_map(const PipelineConfig& c) {
  std::map<std::string, TaskConfig> m;
  for (const auto& t : c.tasks) m[t.task_name] = t;
  return m;
}

// --- stages ---------------------------------------------------------------

struct Ctx {
  const PipelineConfig& config;
  RunResult& result;
  Gateway gateway;
  PromptLibrary prompts;

  void artifact(const std::string& path) {
    if (std::find(result.artifacts.begin(), result.artifacts.end(), path) ==
        result.artifacts.end()) {
      result.artifacts.push_back(path);
    }
  }
};

ordered_json stage_build(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  Schema schema = Schema::load(c.schema_path);
  std::vector<ParsedDocument> docs;
  for (const auto& d : c.documents) {
    docs.push_back(load_parsed_document(resolve(c.base_dir, d), c.corpus_root));
  }
  std::vector<TripletSource> triplets;
  for (const auto& t : c.triplets) triplets.push_back({t, load_triplets(resolve(c.base_dir, t))});

  BuilderOptions options = c.builder;
  options.prompts = &ctx.prompts;
  BuildReport report;
  KnowledgeGraph g = build_graph(docs, triplets, schema, ctx.gateway, options, report);
  ValidationReport v = validate_graph(g);
  if (!v.empty()) {
    throw InvalidNode("built graph fails validation: " + v.front().rule + " at " +
                      v.front().node_id + " (" + std::to_string(v.size()) + " violations)");
  }
  save_graph(g, c.out(c.outputs.graph), schema.name);
  write_json(c.out(c.outputs.graph_stats), graph_stats_to_json(compute_graph_stats(g)));
  ordered_json rep = report.to_json();
  write_json(c.out(c.outputs.build_report), rep);
  ctx.artifact(c.out(c.outputs.graph));
  ctx.artifact(c.out(c.outputs.graph_stats));
  ctx.artifact(c.out(c.outputs.build_report));

  ordered_json counters = ordered_json::object();
  for (const auto& [k, val] : rep.items()) {
    if (val.is_number_unsigned()) counters[k] = val;
  }
  counters["nodes"] = g.node_count();
  counters["edges"] = g.edge_count();
  return counters;
}

ordered_json stage_sample(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  KnowledgeGraph g = load_graph(c.out(c.outputs.graph));
  SamplingGraph sg = SamplingGraph::from_graph(g);

  struct Job {
    const TaskConfig* task;
    std::size_t index;
  };
  std::vector<Job> jobs;
  for (const auto& t : c.tasks) {
    for (std::size_t i = 0; i < t.samples_requested; ++i) jobs.push_back({&t, i});
  }
  enum class Outcome { kOk, kNoBackbone, kNoTrace };
  auto results = parallel_map(jobs.size(), c.gateway.workers, [&](std::size_t j) {
    const Job& job = jobs[j];
    const TaskConfig& t = *job.task;
    std::pair<Outcome, Trace> out{Outcome::kOk, {}};
    Subgraph sub;
    try {
      sub = augmented_chain_sample(sg, t.subgraph_size,
                                   derive_seed(c.seed, "acs/" + t.task_name, job.index));
    } catch (const EmptyGraph&) {
      out.first = Outcome::kNoBackbone;
      return out;
    } catch (const NoBackboneFound&) {
      out.first = Outcome::kNoBackbone;
      return out;
    }
    std::vector<std::size_t> keep;
    for (const NodeId& id : sub.nodes) keep.push_back(*sg.index_of(id));
    std::sort(keep.begin(), keep.end());
    SamplingGraph local = sg.induced(keep);
    try {
      out.second = generate_trace(local, t, derive_seed(c.seed, "trace/" + t.task_name, job.index));
    } catch (const NoValidTrace&) {
      out.first = Outcome::kNoTrace;
    }
    return out;
  });

  std::vector<Trace> traces;
  std::set<std::string> seen;
  std::size_t no_backbone = 0, no_trace = 0, duplicates = 0;
  for (auto& [outcome, trace] : results) {
    if (outcome == Outcome::kNoBackbone) {
      ++no_backbone;
    } else if (outcome == Outcome::kNoTrace) {
      ++no_trace;
    } else if (!seen.insert(trace_to_json(trace).dump()).second) {
      ++duplicates;
    } else {
      traces.push_back(std::move(trace));
    }
  }
  write_traces(traces, c.out(c.outputs.traces));
  ctx.artifact(c.out(c.outputs.traces));
  ordered_json counters;
  counters["requested"] = jobs.size();
  counters["traces"] = traces.size();
  counters["no_backbone"] = no_backbone;
  counters["no_valid_trace"] = no_trace;
  counters["duplicate_traces"] = duplicates;
  return counters;
}

ordered_json stage_generate(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  KnowledgeGraph g = load_graph(c.out(c.outputs.graph));
  std::vector<Trace> traces = read_traces(c.out(c.outputs.traces));
  Schema schema = Schema::load(c.schema_path);
  SynthesisOptions options{c.domain, &ctx.prompts};
  SynthesisCounters sc;
  std::vector<QARecord> records =
      generate_all(traces, g, task_map(c), schema, ctx.gateway, options, sc);
  write_dataset(records, c.out(c.outputs.candidates));
  ctx.artifact(c.out(c.outputs.candidates));
  ordered_json counters;
  counters["traces"] = traces.size();
  counters["generated"] = sc.generated;
  counters["parse_failures"] = sc.parse_failures;
  return counters;
}

ordered_json stage_filter(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  std::vector<QARecord> candidates = read_dataset(c.out(c.outputs.candidates));
  std::vector<QARecord> unique =
      candidates.empty()
          ? std::vector<QARecord>{}
          : deduplicate(candidates, ctx.gateway.require_embedding(), c.policy.dedup_threshold);

  // Complexity ratings that stay unreadable after the repair turn leave the
  // record unscored instead of failing the whole run.
  std::atomic<std::size_t> judge_failures{0}, complexity_failures{0};
  const EndpointPool* complexity =
      ctx.gateway.complexity ? ctx.gateway.complexity.get() : ctx.gateway.chat.get();
  parallel_map(unique.size(), ctx.gateway.workers, [&](std::size_t i) {
    QARecord& r = unique[i];
    if (ctx.gateway.judges.size() == 3) {
      r.scores.support = score_support(r, ctx.gateway.judges, ctx.prompts, &judge_failures);
    }
    if (ctx.gateway.weak && ctx.gateway.strong) {
      r.scores.difficulty = score_difficulty(r, *ctx.gateway.weak, *ctx.gateway.strong,
                                             default_grader(), ctx.prompts);
    }
    if (complexity) {
      try {
        r.scores.complexity = score_complexity(r, *complexity, ctx.prompts);
      } catch (const ComplexityParseError&) {
        ++complexity_failures;
      }
    }
    r.token_len = whitespace_tokens(r.question);
    return 0;
  });
  write_dataset(unique, c.out(c.outputs.scored));

  std::vector<QARecord> scorable;
  std::size_t unscored = 0;
  for (const QARecord& r : unique) {
    bool missing = (c.policy.require_support && !r.scores.support) ||
                   (!c.policy.difficulty_keep.empty() && !r.scores.difficulty) ||
                   (c.policy.complexity_min > 0 && !r.scores.complexity);
    if (missing) {
      ++unscored;
    } else {
      scorable.push_back(r);
    }
  }
  FilterResult fr = filter_dataset(scorable, c.policy);
  write_dataset(fr.kept, c.out(c.outputs.dataset));

  ordered_json report;
  report["candidates"] = candidates.size();
  report["after_dedup"] = unique.size();
  report["duplicates_removed"] = candidates.size() - unique.size();
  report["kept"] = fr.kept.size();
  ordered_json dropped = ordered_json::object();
  for (const auto& [reason, n] : fr.dropped) dropped[reason] = n;
  if (unscored) dropped["unscored"] = unscored;
  report["dropped"] = std::move(dropped);
  report["judge_transport_failures"] = judge_failures.load();
  report["complexity_parse_failures"] = complexity_failures.load();
  report["policy"] = policy_to_json(c.policy);
  write_json(c.out(c.outputs.filter_report), report);
  ctx.artifact(c.out(c.outputs.scored));
  ctx.artifact(c.out(c.outputs.dataset));
  ctx.artifact(c.out(c.outputs.filter_report));

  ordered_json counters;
  counters["candidates"] = candidates.size();
  counters["duplicates_removed"] = candidates.size() - unique.size();
  counters["judge_transport_failures"] = judge_failures.load();
  counters["complexity_parse_failures"] = complexity_failures.load();
  counters["unscored"] = unscored;
  counters["kept"] = fr.kept.size();
  return counters;
}

ordered_json stage_analyze(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  std::vector<QARecord> dataset = read_dataset(c.out(c.outputs.dataset));
  StatsReport stats = compute_stats(dataset, whitespace_tokens, flat_counters(read_counters(c)));
  write_file(c.out(c.outputs.stats_json), render_report(stats, "structured"));
  write_file(c.out(c.outputs.stats_text), render_report(stats, "plain_text"));
  ctx.artifact(c.out(c.outputs.stats_json));
  ctx.artifact(c.out(c.outputs.stats_text));
  ordered_json counters;
  counters["records"] = dataset.size();
  return counters;
}

ordered_json stage_export(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  KnowledgeGraph g = load_graph(c.out(c.outputs.graph));
  std::size_t n = export_cypher(g, c.out(c.outputs.cypher));
  ctx.artifact(c.out(c.outputs.cypher));
  ordered_json counters;
  counters["statements"] = n;
  return counters;
}

void check_config(const PipelineConfig& c) {
  if (!fs::exists(c.schema_path)) throw ConfigError("schema_path: no file at '" + c.schema_path + "'");
  Schema::load(c.schema_path);
  for (const auto& d : c.documents) {
    if (!fs::exists(resolve(c.base_dir, d))) throw ConfigError("corpus.documents: missing '" + d + "'");
  }
  for (const auto& t : c.triplets) {
    if (!fs::exists(resolve(c.base_dir, t))) throw ConfigError("corpus.triplets: missing '" + t + "'");
  }
  if (c.gateway.mock && !c.gateway.mock_fixtures.empty() && !fs::exists(c.gateway.mock_fixtures)) {
    throw ConfigError("gateway.mock_fixtures: missing '" + c.gateway.mock_fixtures + "'");
  }
  if (!c.prompts_dir.empty() && !fs::is_directory(c.prompts_dir)) {
    throw ConfigError("prompts_dir: not a directory '" + c.prompts_dir + "'");
  }
  if (!c.gateway.mock) {
    if (c.gateway.chat.empty()) throw ConfigError("gateway.chat: at least one endpoint is required");
    if (c.gateway.embedding.empty()) {
      throw ConfigError("gateway.embedding: at least one endpoint is required");
    }
    if (c.policy.require_support && c.gateway.judges.size() != 3) {
      throw ConfigError("gateway.judges: require_support needs exactly 3 judges");
    }
    if (!c.policy.difficulty_keep.empty() && (c.gateway.weak.empty() || c.gateway.strong.empty())) {
      throw ConfigError("gateway.weak: difficulty filtering needs weak and strong endpoints");
    }
  }
}

}  // namespace

std::string PipelineConfig::out(const std::string& name) const {
  return (fs::path(out_dir) / name).string();
}

void apply_override(json& doc, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  }
  std::string key = assignment.substr(0, eq);
  std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* cur = &doc;
  std::size_t pos = 0;
  while (true) {
    std::size_t dot = key.find('.', pos);
    std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (part.empty()) throw ConfigError("--set: empty key segment in '" + key + "'");
    if (cur->is_null()) *cur = json::object();
    if (!cur->is_object()) throw ConfigError(key + ": cannot set inside a non-object");
    if (dot == std::string::npos) {
      (*cur)[part] = value;
      return;
    }
    cur = &(*cur)[part];
    pos = dot + 1;
  }
}

PipelineConfig parse_config(json doc, const std::string& base_dir,
                            const ConfigOverrides& overrides) {
  if (!doc.is_object()) throw ConfigError("config: expected an object");
  for (const auto& s : overrides.set) apply_override(doc, s);
  if (overrides.seed) doc["seed"] = *overrides.seed;
  if (overrides.mock) doc["gateway"]["mock"] = true;

  PipelineConfig c;
  c.base_dir = base_dir;
  std::string schema = get_or<std::string>(doc, "schema_path", "");
  if (schema.empty()) throw ConfigError("schema_path: required");
  c.schema_path = resolve(base_dir, schema);
  c.seed = get_or<std::uint64_t>(doc, "seed", 0);
  c.out_dir = overrides.out_dir ? *overrides.out_dir
                                : resolve(base_dir, get_or<std::string>(doc, "out_dir", "out"));
  c.domain = get_or<std::string>(doc, "domain", "general");
  c.prompts_dir = resolve(base_dir, get_or<std::string>(doc, "prompts_dir", ""));
  c.corpus_root = resolve(base_dir, get_or<std::string>(doc, "corpus.root", "."));
  c.documents = get_or<std::vector<std::string>>(doc, "corpus.documents", {});
  c.triplets = get_or<std::vector<std::string>>(doc, "corpus.triplets", {});

  c.builder.chunk.max_chars = get_or<std::size_t>(doc, "builder.chunk_max_chars", 600);
  c.builder.chunk.separators =
      get_or<std::vector<std::string>>(doc, "builder.separators", c.builder.chunk.separators);
  c.builder.formula_context_k = get_or<int>(doc, "builder.formula_context_k", 2);
  c.builder.cluster_threshold = get_or<double>(doc, "builder.cluster_threshold", 0.85);
  c.builder.extraction_retries = get_or<int>(doc, "builder.extraction_retries", 2);
  c.builder.embed_batch = get_or<std::size_t>(doc, "builder.embed_batch", 64);
  if (c.builder.chunk.max_chars == 0) throw ConfigError("builder.chunk_max_chars: must be positive");
  if (c.builder.embed_batch == 0) throw ConfigError("builder.embed_batch: must be positive");
  if (c.builder.extraction_retries < 0) throw ConfigError("builder.extraction_retries: must be >= 0");

  GatewayConfig& gw = c.gateway;
  gw.mock = get_or<bool>(doc, "gateway.mock", false);
  std::string fixtures = get_or<std::string>(doc, "gateway.mock_fixtures", "");
  gw.mock_fixtures = resolve(base_dir, fixtures);
  gw.embedding_dim = get_or<std::size_t>(doc, "gateway.embedding_dim", 64);
  gw.max_in_flight = get_or<std::size_t>(doc, "gateway.max_in_flight", 4);
  gw.workers = get_or<std::size_t>(doc, "gateway.workers", 4);
  gw.retry.max_attempts = get_or<int>(doc, "gateway.retry.max_attempts", 3);
  gw.retry.base_delay =
      std::chrono::milliseconds(get_or<long long>(doc, "gateway.retry.base_delay_ms", 200));
  gw.retry.multiplier = get_or<double>(doc, "gateway.retry.multiplier", 2.0);
  gw.retry.max_delay =
      std::chrono::milliseconds(get_or<long long>(doc, "gateway.retry.max_delay_ms", 5000));
  if (gw.retry.max_attempts < 1) throw ConfigError("gateway.retry.max_attempts: must be >= 1");
  gw.extraction_temperature = get_or<double>(doc, "gateway.extraction_temperature", 0.2);
  gw.generation_temperature = get_or<double>(doc, "gateway.generation_temperature", 0.7);
  gw.chat = endpoints_from(doc, "gateway.chat");
  gw.vision = endpoints_from(doc, "gateway.vision");
  gw.embedding = endpoints_from(doc, "gateway.embedding");
  gw.weak = endpoints_from(doc, "gateway.weak");
  gw.strong = endpoints_from(doc, "gateway.strong");
  gw.complexity = endpoints_from(doc, "gateway.complexity");
  if (const json* judges = find_key(doc, "gateway.judges"); judges && !judges->is_null()) {
    if (!judges->is_array()) throw ConfigError("gateway.judges: expected a list of 3 judges");
    for (std::size_t i = 0; i < judges->size(); ++i) {
      json wrapped = {{"j", (*judges)[i]}};
      gw.judges.push_back(endpoints_from(wrapped, "j"));
    }
    if (gw.judges.size() != 3) throw ConfigError("gateway.judges: exactly 3 judges are required");
  }

  const json* tasks = find_key(doc, "sampling.tasks");
  auto samples = find_key(doc, "sampling.samples_requested");
  if (!tasks || tasks->is_null()) {
    c.tasks = load_task_presets();
  } else {
    if (!tasks->is_array()) throw ConfigError("sampling.tasks: expected a list");
    for (const json& t : *tasks) {
      if (t.is_string()) {
        const TaskConfig* p = find_preset(t.get<std::string>());
        if (!p) throw ConfigError("sampling.tasks: unknown task '" + t.get<std::string>() + "'");
        c.tasks.push_back(*p);
      } else {
        c.tasks.push_back(task_from_json(t));
      }
    }
  }
  if (samples && !samples->is_null()) {
    if (!samples->is_number_unsigned()) {
      throw ConfigError("sampling.samples_requested: expected a non-negative integer");
    }
    for (auto& t : c.tasks) t.samples_requested = samples->get<std::size_t>();
  }
  std::set<std::string> names;
  for (const auto& t : c.tasks) {
    t.validate();
    if (!names.insert(t.task_name).second) {
      throw ConfigError("sampling.tasks: duplicate task '" + t.task_name + "'");
    }
  }

  if (const json* q = find_key(doc, "quality")) c.policy = policy_from_json(*q);

  if (const json* outs = find_key(doc, "outputs"); outs && outs->is_object()) {
    auto set = [&](const char* key, std::string& field) {
      field = get_or<std::string>(*outs, key, field);
    };
    set("graph", c.outputs.graph);
    set("graph_stats", c.outputs.graph_stats);
    set("build_report", c.outputs.build_report);
    set("cypher", c.outputs.cypher);
    set("traces", c.outputs.traces);
    set("candidates", c.outputs.candidates);
    set("scored", c.outputs.scored);
    set("dataset", c.outputs.dataset);
    set("filter_report", c.outputs.filter_report);
    set("stats_json", c.outputs.stats_json);
    set("stats_text", c.outputs.stats_text);
    set("counters", c.outputs.counters);
    set("manifest", c.outputs.manifest);
  }
  c.document = std::move(doc);
  return c;
}

PipelineConfig load_config(const std::string& path, const ConfigOverrides& overrides) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config: '" + path + "' is not valid JSON");
  return parse_config(std::move(doc), fs::path(path).parent_path().string(), overrides);
}

Gateway make_gateway(const PipelineConfig& c) {
  const GatewayConfig& gc = c.gateway;
  std::shared_ptr<const MockFixtures> fixtures;
  if (gc.mock) {
    fixtures = std::make_shared<const MockFixtures>(
        gc.mock_fixtures.empty() ? MockFixtures{} : MockFixtures::load(gc.mock_fixtures));
  }
  auto pool = [&](const std::vector<EndpointSpec>& specs, Capability cap,
                  const std::string& stream, const std::string& mock_model) {
    std::vector<EndpointSpec> use = specs;
    if (use.empty()) {
      if (!gc.mock) return std::shared_ptr<EndpointPool>();
      use.push_back({"mock://", mock_model, ""});
    }
    std::vector<std::shared_ptr<Provider>> providers;
    for (const auto& s : use) {
      ProviderEndpoint ep{gc.mock ? "mock://" : s.base_url, s.model, s.auth_env, cap};
      if (gc.mock) {
        providers.push_back(std::make_shared<MockProvider>(ep, fixtures, gc.embedding_dim));
      } else {
        providers.push_back(std::make_shared<HttpProvider>(ep));
      }
    }
    auto p = std::make_shared<EndpointPool>(std::move(providers), gc.retry, gc.max_in_flight,
                                            derive_seed(c.seed, "pool/" + stream, 0));
    if (gc.mock) p->set_sleeper([](std::chrono::milliseconds) {});
    return p;
  };
  Gateway g;
  g.chat = pool(gc.chat, Capability::kChat, "chat", "mock-chat");
  g.vision = pool(gc.vision, Capability::kVision, "vision", "mock-vision");
  g.embedding = pool(gc.embedding, Capability::kEmbedding, "embedding", "mock-embed");
  if (!gc.judges.empty()) {
    for (std::size_t i = 0; i < gc.judges.size(); ++i) {
      g.judges.push_back(pool(gc.judges[i], Capability::kChat, "judge" + std::to_string(i),
                              "mock-judge-" + std::to_string(i + 1)));
    }
  } else if (gc.mock) {
    for (int i = 1; i <= 3; ++i) {
      g.judges.push_back(pool({}, Capability::kChat, "judge" + std::to_string(i - 1),
                              "mock-judge-" + std::to_string(i)));
    }
  }
  g.weak = pool(gc.weak, Capability::kChat, "weak", "mock-weak");
  g.strong = pool(gc.strong, Capability::kChat, "strong", "mock-strong");
  if (!gc.complexity.empty()) g.complexity = pool(gc.complexity, Capability::kChat, "complexity", "");
  g.extraction_temperature = gc.extraction_temperature;
  g.generation_temperature = gc.generation_temperature;
  g.workers = gc.workers;
  return g;
}

RunResult run_command(const std::string& command, const PipelineConfig& config) {
  RunResult result;
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
    result.status = 2;
    result.error = "ConfigError: unknown command '" + command + "'";
    return result;
  }
  try {
    check_config(config);
  } catch (const Error& e) {
    result.status = 2;
    result.error = e.what();
    return result;
  }
  if (command == "validate-config") return result;

  std::vector<std::string> stages;
  if (command == "pipeline") {
    stages = {"build-graph", "sample", "generate-qa", "filter", "analyze", "export"};
  } else {
    stages = {command};
  }
  auto started = std::chrono::steady_clock::now();
  try {
    fs::create_directories(config.out_dir);
    Ctx ctx{config, result, make_gateway(config), PromptLibrary()};
    if (!config.prompts_dir.empty()) ctx.prompts.load_overrides(config.prompts_dir);
    for (const auto& stage : stages) {
      auto t0 = std::chrono::steady_clock::now();
      ordered_json counters;
      std::string key;
      if (stage == "build-graph") {
        counters = stage_build(ctx);
        key = "build";
      } else if (stage == "sample") {
        counters = stage_sample(ctx);
        key = "sample";
      } else if (stage == "generate-qa") {
        counters = stage_generate(ctx);
        key = "generate";
      } else if (stage == "filter") {
        counters = stage_filter(ctx);
        key = "filter";
      } else if (stage == "analyze") {
        counters = stage_analyze(ctx);
      } else {
        counters = stage_export(ctx);
      }
      if (!key.empty()) {
        store_counters(config, key, counters);
        ctx.artifact(config.out(config.outputs.counters));
      }
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.stages.push_back({stage, secs, counters});
    }
  } catch (const std::exception& e) {
    result.status = 1;
    result.error = e.what();
  }

  try {
    ordered_json m;
    m["command"] = command;
    m["status"] = result.status == 0 ? "ok" : "failed";
    if (!result.error.empty()) m["error"] = result.error;
    m["seed"] = config.seed;
    ordered_json seeds;
    for (const auto& t : config.tasks) {
      seeds[t.task_name] = {{"acs", derive_seed(config.seed, "acs/" + t.task_name, 0)},
                            {"trace", derive_seed(config.seed, "trace/" + t.task_name, 0)}};
    }
    m["derived_seeds_index0"] = std::move(seeds);
    m["mock"] = config.gateway.mock;
    ordered_json st = ordered_json::array();
    for (const auto& s : result.stages) {
      st.push_back({{"stage", s.name}, {"seconds", s.seconds}, {"counters", s.counters}});
    }
    m["stages"] = std::move(st);
    m["total_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    m["artifacts"] = result.artifacts;
    m["config"] = config.document;
    fs::create_directories(config.out_dir);
    write_json(config.out(config.outputs.manifest), m);
    result.artifacts.push_back(config.out(config.outputs.manifest));
  } catch (const std::exception& e) {
    if (result.status == 0) {
      result.status = 1;
      result.error = e.what();
    }
  }
  return result;
}

}  // namespace kgsynth
