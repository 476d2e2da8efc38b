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

#ifndef KGSYNTH_HTTP_PROVIDER_H_
#define KGSYNTH_HTTP_PROVIDER_H_

#include <chrono>
#include <string>

#include "kgsynth/gateway.h"

namespace kgsynth {

// Client for chat-completions style HTTP APIs.
//
//   POST {base_url}/chat/completions
//     {"model", "messages": [{"role","content"}], "temperature", "max_tokens",
//      "response_format": {"type":"json_object"} when structured}
//     -> {"choices":[{"message":{"content"}, "finish_reason"}], "usage":{...}}
//   POST {base_url}/embeddings
//     {"model", "input": [texts]} -> {"data":[{"index","embedding":[...]}]}
//
// Vision requests go to /chat/completions with the image inlined as a base64
// data URL content part. Authorization: Bearer $<auth_token_ref>.
// Transport failures, 408, 429 and 5xx are transient.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(ProviderEndpoint endpoint,
                        std::chrono::seconds timeout = std::chrono::seconds(120));

  const ProviderEndpoint& endpoint() const override { return endpoint_; }
  ChatResponse chat(const ChatRequest& request) override;
  std::string describe_image(const VisionRequest& request) override;
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

 private:
  std::string post(const std::string& route, const std::string& body) const;

  ProviderEndpoint endpoint_;
  std::string token_;
  std::chrono::seconds timeout_;
};

}  // namespace kgsynth

#endif  // KGSYNTH_HTTP_PROVIDER_H_
