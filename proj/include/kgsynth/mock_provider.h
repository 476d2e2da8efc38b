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

#ifndef KGSYNTH_MOCK_PROVIDER_H_
#define KGSYNTH_MOCK_PROVIDER_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgsynth/gateway.h"

namespace kgsynth {

// Offline provider whose every answer is a pure function of the request.
//
// Chat: the request text (message contents joined by '\n') is matched against
// fixture rules in file order; a rule matches when every keyword occurs in the
// text and its model (if set) equals the endpoint's model. The first match's
// response is rendered with these placeholders:
//   {{digest}}           16 hex digits of the request digest
//   {{pick:a|b|c}}       option (digest mod n); equal n gives equal picks
//   {{capture:REGEX}}    first group (or whole match) of REGEX in the request
// With no match the reply is "mock:<digest>".
//
// The digest is FNV-1a 64 over the model name, a 0x1f byte and the request
// text, so endpoints with different model names disagree deterministically.
//
// Embedding: seed = fnv1a64(text); draw D values from std::mt19937_64 as
// v_i = 2 * ((x >> 11) * 2^-53) - 1 and scale to unit length.
struct MockRule {
  std::vector<std::string> keywords;
  std::optional<std::string> model;
  std::string response;
};

struct MockFixtures {
  std::vector<MockRule> rules;

  // {"rules": [{"keywords": [...], "model": "...", "response": "..."}]}
  static MockFixtures parse(std::string_view json_text);
  static MockFixtures load(const std::string& path);

  const MockRule* match(std::string_view text, std::string_view model) const;
};

std::uint64_t mock_digest(std::string_view model, std::string_view text);

std::string render_mock_response(std::string_view tmpl, std::string_view request_text,
                                 std::uint64_t digest);

Embedding mock_embedding(std::string_view text, std::size_t dim = 64);

class MockProvider : public Provider {
 public:
  MockProvider(ProviderEndpoint endpoint, std::shared_ptr<const MockFixtures> fixtures,
               std::size_t embedding_dim = 64);

  const ProviderEndpoint& endpoint() const override { return endpoint_; }
  ChatResponse chat(const ChatRequest& request) override;
  std::string describe_image(const VisionRequest& request) override;
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

  std::string respond(std::string_view request_text) const;

 private:
  ProviderEndpoint endpoint_;
  std::shared_ptr<const MockFixtures> fixtures_;
  std::size_t dim_;
};

}  // namespace kgsynth

#endif  // KGSYNTH_MOCK_PROVIDER_H_
