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

#include "kgsynth/gateway.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <thread>

#include "kgsynth/errors.h"
#include "kgsynth/text.h"

namespace kgsynth {

std::string_view capability_name(Capability c) {
  switch (c) {
    case Capability::kChat: return "chat";
    case Capability::kVision: return "vision";
    case Capability::kEmbedding: return "embedding";
  }
  return "?";
}

std::optional<Capability> parse_capability(std::string_view s) {
  for (Capability c : {Capability::kChat, Capability::kVision, Capability::kEmbedding}) {
    if (capability_name(c) == s) return c;
  }
  return std::nullopt;
}

std::string ProviderEndpoint::label() const { return model_name + "@" + base_url; }

ChatRequest user_request(std::string prompt, double temperature, bool structured) {
  ChatRequest r;
  r.messages.push_back({"user", std::move(prompt)});
  r.temperature = temperature;
  r.expects_structured = structured;
  return r;
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
  double d = static_cast<double>(base_delay.count()) *
             std::pow(multiplier < 1.0 ? 1.0 : multiplier, std::max(0, attempt - 1));
  d = std::min(d, static_cast<double>(std::max(max_delay, base_delay).count()));
  return std::chrono::milliseconds(static_cast<long long>(d));
}

EndpointPool::EndpointPool(std::vector<std::shared_ptr<Provider>> providers, RetryPolicy retry,
                           std::size_t max_in_flight, std::uint64_t seed)
    : providers_(std::move(providers)),
      retry_(retry),
      max_in_flight_(std::clamp<std::size_t>(max_in_flight, 1, 1024)),
      in_flight_(std::make_unique<std::counting_semaphore<1024>>(
          static_cast<std::ptrdiff_t>(max_in_flight_))),
      rng_(seed),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (retry_.max_attempts < 1) retry_.max_attempts = 1;
}

template <class Fn>
auto EndpointPool::call_with_retry(Fn&& fn) const -> decltype(fn(std::declval<Provider&>())) {
  if (providers_.empty()) throw ConfigError("endpoint pool is empty");
  std::map<std::string, std::string> last_errors;
  std::vector<std::size_t> healthy(providers_.size());
  for (std::size_t i = 0; i < healthy.size(); ++i) healthy[i] = i;
  std::vector<std::size_t> permanent;

  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    std::size_t pick;
    {
      std::lock_guard<std::mutex> lock(rng_mu_);
      pick = healthy[rng_.uniform_index(healthy.size())];
    }
    Provider& provider = *providers_[pick];
    bool transient = true;
    try {
      in_flight_->acquire();
      struct Release {
        std::counting_semaphore<1024>* s;
        ~Release() { s->release(); }
      } release{in_flight_.get()};
      return fn(provider);
    } catch (const ProviderError& e) {
      last_errors[provider.endpoint().label()] = e.what();
      transient = e.transient();
    }
    // Later attempts go to endpoints that have not failed in this call. When
    // every endpoint has failed transiently, the whole pool is eligible again.
    std::erase(healthy, pick);
    if (!transient) permanent.push_back(pick);
    if (healthy.empty()) {
      for (std::size_t i = 0; i < providers_.size(); ++i) {
        if (std::find(permanent.begin(), permanent.end(), i) == permanent.end()) {
          healthy.push_back(i);
        }
      }
      if (healthy.empty()) break;
    }
    if (attempt < retry_.max_attempts) sleeper_(retry_.delay_after(attempt));
  }
  throw AllEndpointsFailed(std::move(last_errors));
}

ChatResponse EndpointPool::chat(const ChatRequest& request) const {
  if (request.messages.empty()) throw ConfigError("chat request has no messages");
  return call_with_retry([&](Provider& p) {
    ChatResponse r = p.chat(request);
    r.endpoint = p.endpoint().label();
    return r;
  });
}

namespace {

std::string mime_for(const std::string& path) {
  std::string ext = ascii_lower(std::filesystem::path(path).extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

}  // namespace

std::string EndpointPool::describe_image(const std::string& asset_file,
                                         const std::string& context,
                                         const std::string& instruction) const {
  VisionRequest req;
  req.asset.locator = asset_file;
  req.asset.mime_type = mime_for(asset_file);
  try {
    if (!std::filesystem::is_regular_file(asset_file)) throw IoError("not a regular file");
    req.asset.bytes = read_file(asset_file);
  } catch (const IoError&) {
    throw AssetUnreadable("cannot read image asset '" + asset_file + "'");
  }
  req.context = context;
  req.instruction = instruction;
  return call_with_retry([&](Provider& p) {
    std::string text = p.describe_image(req);
    if (trim(text).empty()) throw ProviderError("empty image description", true);
    return text;
  });
}

std::vector<Embedding> EndpointPool::embed(const std::vector<std::string>& texts) const {
  if (texts.empty()) return {};
  return call_with_retry([&](Provider& p) {
    std::vector<Embedding> out = p.embed(texts);
    if (out.size() != texts.size()) {
      throw ProviderError("embedding count mismatch", false);
    }
    for (const Embedding& v : out) {
      if (v.size() != out.front().size() || v.size() == 0) {
        throw ProviderError("embedding dimensions differ", false);
      }
      if (!v.allFinite()) throw ProviderError("non-finite embedding value", false);
    }
    return out;
  });
}

const EndpointPool& Gateway::require_chat() const {
  if (!chat) throw ConfigError("no chat endpoints configured");
  return *chat;
}

const EndpointPool& Gateway::require_vision() const {
  if (!vision) throw ConfigError("no vision endpoints configured");
  return *vision;
}

const EndpointPool& Gateway::require_embedding() const {
  if (!embedding) throw ConfigError("no embedding endpoints configured");
  return *embedding;
}

}  // namespace kgsynth
