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

#ifndef KGSYNTH_GATEWAY_H_
#define KGSYNTH_GATEWAY_H_

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kgsynth/embedding.h"
#include "kgsynth/rng.h"

namespace kgsynth {

enum class Capability { kChat, kVision, kEmbedding };

std::string_view capability_name(Capability c);
std::optional<Capability> parse_capability(std::string_view s);

struct ProviderEndpoint {
  std::string base_url;
  std::string model_name;
  // Name of the environment variable holding the bearer token; empty for
  // unauthenticated endpoints.
  std::string auth_token_ref;
  Capability capability = Capability::kChat;

  // "model@base_url", used to key per-endpoint errors.
  std::string label() const;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.2;
  int max_output_tokens = 2048;
  bool expects_structured = false;
};

// Convenience for a one-turn user request.
ChatRequest user_request(std::string prompt, double temperature, bool structured);

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  std::string finish_reason;
  Usage usage;
  // Label of the endpoint that served the response.
  std::string endpoint;
};

struct ImageAsset {
  std::string locator;
  std::string bytes;
  std::string mime_type;
};

struct VisionRequest {
  ImageAsset asset;
  std::string context;
  std::string instruction;
  double temperature = 0.2;
  int max_output_tokens = 1024;
};

// Failure reported by a provider. Transient failures (transport errors,
// throttling, server errors) are retried; others fail the endpoint for the
// current call.
class ProviderError : public std::runtime_error {
 public:
  ProviderError(const std::string& message, bool transient)
      : std::runtime_error(message), transient_(transient) {}
  bool transient() const { return transient_; }

 private:
  bool transient_;
};

// One model endpoint. Implementations must be safe for concurrent calls.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual const ProviderEndpoint& endpoint() const = 0;
  virtual ChatResponse chat(const ChatRequest& request) = 0;
  virtual std::string describe_image(const VisionRequest& request) = 0;
  virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{5000};

  // Delay before attempt `attempt + 1`, after `attempt` failures (attempt >= 1).
  // Non-decreasing in `attempt`.
  std::chrono::milliseconds delay_after(int attempt) const;
};

// A set of interchangeable endpoints behind one interface. Each attempt picks
// uniformly at random among the endpoints that have not yet failed during the
// current call; transient failures back off exponentially. At most
// `max_in_flight` provider calls run at once.
class EndpointPool {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  EndpointPool(std::vector<std::shared_ptr<Provider>> providers, RetryPolicy retry = {},
               std::size_t max_in_flight = 4, std::uint64_t seed = 0);
  EndpointPool(const EndpointPool&) = delete;
  EndpointPool& operator=(const EndpointPool&) = delete;

  // Throws ConfigError (empty pool) or AllEndpointsFailed.
  ChatResponse chat(const ChatRequest& request) const;

  // Reads the asset file first; throws AssetUnreadable, ConfigError or
  // AllEndpointsFailed.
  std::string describe_image(const std::string& asset_file, const std::string& context,
                             const std::string& instruction) const;

  // One vector per text, in order, all of one dimension with finite values.
  std::vector<Embedding> embed(const std::vector<std::string>& texts) const;

  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  std::size_t size() const { return providers_.size(); }
  std::size_t max_in_flight() const { return max_in_flight_; }
  const RetryPolicy& retry_policy() const { return retry_; }
  const std::vector<std::shared_ptr<Provider>>& providers() const { return providers_; }

 private:
  template <class Fn>
  auto call_with_retry(Fn&& fn) const -> decltype(fn(std::declval<Provider&>()));

  std::vector<std::shared_ptr<Provider>> providers_;
  RetryPolicy retry_;
  std::size_t max_in_flight_;
  std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
  mutable std::mutex rng_mu_;
  mutable Rng rng_;
  Sleeper sleeper_;
};

// Everything the pipeline talks to. Any pool may be null when the stage that
// needs it is not run.
struct Gateway {
  std::shared_ptr<EndpointPool> chat;
  std::shared_ptr<EndpointPool> vision;
  std::shared_ptr<EndpointPool> embedding;
  // Exactly three support judges.
  std::vector<std::shared_ptr<EndpointPool>> judges;
  std::shared_ptr<EndpointPool> weak;
  std::shared_ptr<EndpointPool> strong;
  // Defaults to `chat` when null.
  std::shared_ptr<EndpointPool> complexity;

  // Decoding temperatures for structured extraction and for generation.
  double extraction_temperature = 0.2;
  double generation_temperature = 0.7;
  // Worker threads used to fan requests out; the pools bound what is in flight.
  std::size_t workers = 4;

  const EndpointPool& require_chat() const;
  const EndpointPool& require_vision() const;
  const EndpointPool& require_embedding() const;
};

}  // namespace kgsynth

#endif  // KGSYNTH_GATEWAY_H_
