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

#include "kgsynth/http_provider.h"

#include <cstdlib>
#include <regex>

#include "httplib.h"
#include "json.hpp"
#include "kgsynth/errors.h"

namespace kgsynth {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("bad base_url '" + url + "'");
  SplitUrl out{m[1].str(), m[2].str()};
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unparsable response: ") + e.what(), true);
  }
}

ChatResponse read_chat(const json& j) {
  ChatResponse r;
  try {
    const json& choice = j.at("choices").at(0);
    const json& content = choice.at("message").at("content");
    r.text = content.is_string() ? content.get<std::string>() : std::string();
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
      r.finish_reason = choice["finish_reason"].get<std::string>();
    }
    if (j.contains("usage") && j["usage"].is_object()) {
      r.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      r.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed chat response: ") + e.what(), true);
  }
  return r;
}

}  // namespace

HttpProvider::HttpProvider(ProviderEndpoint endpoint, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
  split_url(endpoint_.base_url);
  if (!endpoint_.auth_token_ref.empty()) {
    const char* v = std::getenv(endpoint_.auth_token_ref.c_str());
    if (v == nullptr) {
      throw ConfigError("environment variable '" + endpoint_.auth_token_ref + "' is not set");
    }
    token_ = v;
  }
}

std::string HttpProvider::post(const std::string& route, const std::string& body) const {
  SplitUrl u = split_url(endpoint_.base_url);
  httplib::Client client(u.origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  auto res = client.Post(u.prefix + route, headers, body, "application/json");
  if (!res) throw ProviderError("transport: " + httplib::to_string(res.error()), true);
  if (res->status == 408 || res->status == 429 || res->status >= 500) {
    throw ProviderError("HTTP " + std::to_string(res->status), true);
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200),
                        false);
  }
  return res->body;
}

ChatResponse HttpProvider::chat(const ChatRequest& request) {
  json body = {{"model", endpoint_.model_name},
               {"temperature", request.temperature},
               {"max_tokens", request.max_output_tokens},
               {"messages", json::array()}};
  for (const ChatMessage& m : request.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  if (request.expects_structured) body["response_format"] = {{"type", "json_object"}};
  return read_chat(parse_body(post("/chat/completions", body.dump())));
}

std::string HttpProvider::describe_image(const VisionRequest& request) {
  std::string data_url = "data:" + request.asset.mime_type + ";base64," +
                         httplib::detail::base64_encode(request.asset.bytes);
  std::string text = request.instruction;
  if (!request.context.empty()) text += "\n\n" + request.context;
  json content = json::array({{{"type", "text"}, {"text", text}},
                              {{"type", "image_url"}, {"image_url", {{"url", data_url}}}}});
  json body = {{"model", endpoint_.model_name},
               {"temperature", request.temperature},
               {"max_tokens", request.max_output_tokens},
               {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
  return read_chat(parse_body(post("/chat/completions", body.dump()))).text;
}

std::vector<Embedding> HttpProvider::embed(const std::vector<std::string>& texts) {
  json body = {{"model", endpoint_.model_name}, {"input", texts}};
  json j = parse_body(post("/embeddings", body.dump()));
  std::vector<Embedding> out(texts.size());
  try {
    const json& data = j.at("data");
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::size_t index = data[i].value("index", i);
      if (index >= out.size()) throw ProviderError("embedding index out of range", false);
      auto values = data[i].at("embedding").get<std::vector<double>>();
      out[index] = Eigen::Map<Embedding>(values.data(), static_cast<Eigen::Index>(values.size()));
    }
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed embedding response: ") + e.what(), false);
  }
  return out;
}

}  // namespace kgsynth
