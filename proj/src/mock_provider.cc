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

#include "kgsynth/mock_provider.h"

#include <random>
#include <regex>

#include "kgsynth/errors.h"
#include "kgsynth/hash.h"
#include "kgsynth/json_locate.h"
#include "kgsynth/text.h"

namespace kgsynth {

MockFixtures MockFixtures::parse(std::string_view json_text) {
  LocatedJson doc = parse_located(json_text);
  const auto& root = doc.value;
  if (!root.is_object() || !root.contains("rules") || !root["rules"].is_array()) {
    throw FormatError("fixtures need a 'rules' array", "/rules", doc.offset_of("/rules"));
  }
  MockFixtures out;
  for (std::size_t i = 0; i < root["rules"].size(); ++i) {
    const auto& r = root["rules"][i];
    const std::string at = "/rules/" + std::to_string(i);
    MockRule rule;
    if (!r.is_object() || !r.contains("response") || !r["response"].is_string()) {
      throw FormatError("rule needs a string 'response'", at + "/response",
                        doc.offset_of(at));
    }
    rule.response = r["response"].get<std::string>();
    if (r.contains("keywords")) {
      if (!r["keywords"].is_array()) {
        throw FormatError("'keywords' must be an array", at + "/keywords",
                          doc.offset_of(at + "/keywords"));
      }
      for (const auto& k : r["keywords"]) {
        if (!k.is_string()) {
          throw FormatError("keyword must be a string", at + "/keywords",
                            doc.offset_of(at + "/keywords"));
        }
        rule.keywords.push_back(k.get<std::string>());
      }
    }
    if (r.contains("model") && r["model"].is_string()) rule.model = r["model"].get<std::string>();
    out.rules.push_back(std::move(rule));
  }
  return out;
}

MockFixtures MockFixtures::load(const std::string& path) { return parse(read_file(path)); }

const MockRule* MockFixtures::match(std::string_view text, std::string_view model) const {
  for (const MockRule& r : rules) {
    if (r.model && *r.model != model) continue;
    bool all = true;
    for (const std::string& k : r.keywords) {
      if (!contains(text, k)) {
        all = false;
        break;
      }
    }
    if (all) return &r;
  }
  return nullptr;
}

std::uint64_t mock_digest(std::string_view model, std::string_view text) {
  return hash_fields({model, text});
}

std::string render_mock_response(std::string_view tmpl, std::string_view request_text,
                                 std::uint64_t digest) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    std::size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    std::string_view body = tmpl.substr(open + 2, close - open - 2);
    if (body == "digest") {
      out += to_hex(digest);
    } else if (body.rfind("pick:", 0) == 0) {
      std::vector<std::string> options;
      std::string_view rest = body.substr(5);
      while (true) {
        std::size_t bar = rest.find('|');
        options.emplace_back(rest.substr(0, bar));
        if (bar == std::string_view::npos) break;
        rest = rest.substr(bar + 1);
      }
      out += options[digest % options.size()];
    } else if (body.rfind("capture:", 0) == 0) {
      std::regex re{std::string(body.substr(8))};
      std::match_results<std::string_view::const_iterator> m;
      if (std::regex_search(request_text.begin(), request_text.end(), m, re)) {
        out += m.size() > 1 ? m[1].str() : m[0].str();
      }
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  out.append(tmpl.substr(pos));
  return out;
}

Embedding mock_embedding(std::string_view text, std::size_t dim) {
  std::mt19937_64 engine(fnv1a64(text));
  Embedding v(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    v(static_cast<Eigen::Index>(i)) =
        2.0 * (static_cast<double>(engine() >> 11) * 0x1.0p-53) - 1.0;
  }
  double n = v.norm();
  if (n > 0) v /= n;
  return v;
}

MockProvider::MockProvider(ProviderEndpoint endpoint,
                           std::shared_ptr<const MockFixtures> fixtures,
                           std::size_t embedding_dim)
    : endpoint_(std::move(endpoint)),
      fixtures_(fixtures ? std::move(fixtures) : std::make_shared<const MockFixtures>()),
      dim_(embedding_dim == 0 ? 64 : embedding_dim) {}

std::string MockProvider::respond(std::string_view request_text) const {
  std::uint64_t digest = mock_digest(endpoint_.model_name, request_text);
  if (const MockRule* rule = fixtures_->match(request_text, endpoint_.model_name)) {
    return render_mock_response(rule->response, request_text, digest);
  }
  return "mock:" + to_hex(digest);
}

ChatResponse MockProvider::chat(const ChatRequest& request) {
  std::string text;
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    if (i) text += '\n';
    text += request.messages[i].content;
  }
  ChatResponse r;
  r.text = respond(text);
  r.finish_reason = "stop";
  r.usage.prompt_tokens = static_cast<int>(split_whitespace(text).size());
  r.usage.completion_tokens = static_cast<int>(split_whitespace(r.text).size());
  return r;
}

std::string MockProvider::describe_image(const VisionRequest& request) {
  // The asset bytes enter through their hash so descriptions change with the
  // image but prompts stay small.
  std::string text = request.instruction + "\n" + request.context + "\n[asset " +
                     to_hex(fnv1a64(request.asset.bytes)) + "]";
  return respond(text);
}

std::vector<Embedding> MockProvider::embed(const std::vector<std::string>& texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(mock_embedding(t, dim_));
  return out;
}

}  // namespace kgsynth
