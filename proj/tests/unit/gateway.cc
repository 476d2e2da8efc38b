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

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <mutex>
#include <random>
#include <thread>
#include <unistd.h>

#include "doctest.h"
#include "json.hpp"
#include "kgsynth/errors.h"
#include "kgsynth/gateway.h"
#include "kgsynth/hash.h"
#include "kgsynth/http_provider.h"
#include "kgsynth/mock_provider.h"
#include "kgsynth/text.h"
#include "testkit.h"

// After Eigen: <resolv.h> defines a macro that collides with Eigen internals.
#include "httplib.h"

using namespace kgsynth;
namespace fs = std::filesystem;

namespace {

// Fails according to a script: 't' transient, 'p' permanent, 'o' ok.
class FlakyProvider : public Provider {
 public:
  FlakyProvider(std::string model, std::string script) : script_(std::move(script)) {
    ep_.base_url = "flaky://";
    ep_.model_name = std::move(model);
  }
  const ProviderEndpoint& endpoint() const override { return ep_; }
  ChatResponse chat(const ChatRequest&) override {
    char step = next();
    if (step == 't') throw ProviderError("throttled", true);
    if (step == 'p') throw ProviderError("bad request", false);
    ChatResponse r;
    r.text = "ok from " + ep_.model_name;
    return r;
  }
  std::string describe_image(const VisionRequest& r) override {
    return next() == 'o' ? "image of " + std::to_string(r.asset.bytes.size()) + " bytes" : "  ";
  }
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
    char step = next();
    std::vector<Embedding> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      Embedding e = Embedding::Ones(step == 'd' && i == 1 ? 3 : 2);
      if (step == 'n') e[0] = std::nan("");
      out.push_back(e);
    }
    if (step == 'c') out.pop_back();
    return out;
  }
  int calls() const { return calls_; }

 private:
  char next() {
    std::lock_guard<std::mutex> lock(mu_);
    char c = calls_ < static_cast<int>(script_.size()) ? script_[calls_] : 'o';
    ++calls_;
    return c;
  }
  ProviderEndpoint ep_;
  std::string script_;
  std::mutex mu_;
  int calls_ = 0;
};

std::unique_ptr<EndpointPool> make_pool(std::vector<std::shared_ptr<Provider>> ps, int attempts,
                                        std::vector<long long>* delays = nullptr) {
  RetryPolicy rp;
  rp.max_attempts = attempts;
  rp.base_delay = std::chrono::milliseconds(100);
  rp.multiplier = 2.0;
  rp.max_delay = std::chrono::milliseconds(300);
  auto pool = std::make_unique<EndpointPool>(std::move(ps), rp, 2, 9);
  pool->set_sleeper([delays](std::chrono::milliseconds d) {
    if (delays) delays->push_back(d.count());
  });
  return pool;
}

}  // namespace

TEST_SUITE("gateway") {
  TEST_CASE("backoff is exponential, capped and non-decreasing") {
    RetryPolicy rp;
    rp.base_delay = std::chrono::milliseconds(200);
    rp.multiplier = 2.0;
    rp.max_delay = std::chrono::milliseconds(1000);
    CHECK(rp.delay_after(1).count() == 200);
    CHECK(rp.delay_after(2).count() == 400);
    CHECK(rp.delay_after(3).count() == 800);
    CHECK(rp.delay_after(4).count() == 1000);
    for (int a = 1; a < 20; ++a) CHECK(rp.delay_after(a) <= rp.delay_after(a + 1));
  }

  TEST_CASE("transient failures retry with backoff") {
    auto p = std::make_shared<FlakyProvider>("m", "tto");
    std::vector<long long> delays;
    auto pool = make_pool({p}, 3, &delays);
    CHECK(pool->chat(user_request("hi", 0.1, false)).text == "ok from m");
    CHECK(p->calls() == 3);
    CHECK(delays == std::vector<long long>{100, 200});
  }

  TEST_CASE("exhausted attempts raise AllEndpointsFailed with per-endpoint errors") {
    auto a = std::make_shared<FlakyProvider>("a", "tttttt");
    auto b = std::make_shared<FlakyProvider>("b", "pppppp");
    auto pool = make_pool({a, b}, 4);
    try {
      pool->chat(user_request("hi", 0.1, false));
      FAIL("expected AllEndpointsFailed");
    } catch (const AllEndpointsFailed& e) {
      CHECK(e.last_errors().size() == 2);
      CHECK(e.last_errors().count("a@flaky://"));
      CHECK(e.last_errors().at("b@flaky://") == "bad request");
    }
    // The permanently failing endpoint is tried once only.
    CHECK(b->calls() == 1);
  }

  TEST_CASE("failover reaches a healthy endpoint") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto bad = std::make_shared<FlakyProvider>("bad", std::string(10, 'p'));
      auto good = std::make_shared<FlakyProvider>("good", "");
      RetryPolicy rp;
      rp.max_attempts = 2;
      EndpointPool pool({bad, good}, rp, 2, seed);
      pool.set_sleeper([](std::chrono::milliseconds) {});
      auto r = pool.chat(user_request("hi", 0.1, false));
      CHECK(r.text == "ok from good");
      CHECK(r.endpoint == "good@flaky://");
    }
  }

  TEST_CASE("pool misuse") {
    EndpointPool empty({}, RetryPolicy{}, 1, 0);
    CHECK_THROWS_AS(empty.chat(user_request("x", 0, false)), ConfigError);
    auto p = std::make_shared<FlakyProvider>("m", "");
    auto pool = make_pool({p}, 1);
    CHECK_THROWS_AS(pool->chat(ChatRequest{}), ConfigError);
    Gateway g;
    CHECK_THROWS_AS(g.require_chat(), ConfigError);
    CHECK_THROWS_AS(g.require_embedding(), ConfigError);
  }

  TEST_CASE("embeddings are validated") {
    CHECK(make_pool({std::make_shared<FlakyProvider>("m", "")}, 1)->embed({"a", "b"}).size() == 2);
    CHECK(make_pool({std::make_shared<FlakyProvider>("m", "")}, 1)->embed({}).empty());
    for (const char* bad : {"c", "d", "n"}) {
      auto pool = make_pool({std::make_shared<FlakyProvider>("m", bad)}, 1);
      CHECK_THROWS_AS(pool->embed({"a", "b"}), AllEndpointsFailed);
    }
    // Malformed vectors fail the endpoint for this call; another endpoint takes over.
    auto bad = std::make_shared<FlakyProvider>("bad", "nnnn");
    auto good = std::make_shared<FlakyProvider>("good", "");
    CHECK(make_pool({bad, good}, 2)->embed({"a", "b"}).size() == 2);
    CHECK(bad->calls() <= 1);
  }

  TEST_CASE("image descriptions read the asset and reject blank replies") {
    fs::path dir = fs::temp_directory_path() / ("kgsynth_gw_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    write_file((dir / "x.png").string(), "12345");
    auto p = std::make_shared<FlakyProvider>("v", "xo");
    auto pool = make_pool({p}, 2);
    CHECK(pool->describe_image((dir / "x.png").string(), "ctx", "describe") == "image of 5 bytes");
    CHECK_THROWS_AS(pool->describe_image((dir / "nope.png").string(), "", ""), AssetUnreadable);
    CHECK_THROWS_AS(pool->describe_image(dir.string(), "", ""), AssetUnreadable);
    fs::remove_all(dir);
  }

  TEST_CASE("concurrent calls stay within max_in_flight") {
    struct Counting : Provider {
      ProviderEndpoint ep{"c://", "c", "", Capability::kChat};
      std::atomic<int> now{0}, peak{0};
      const ProviderEndpoint& endpoint() const override { return ep; }
      ChatResponse chat(const ChatRequest&) override {
        int v = ++now;
        int p = peak.load();
        while (v > p && !peak.compare_exchange_weak(p, v)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        --now;
        return {"x", "stop", {}, ""};
      }
      std::string describe_image(const VisionRequest&) override { return "x"; }
      std::vector<Embedding> embed(const std::vector<std::string>&) override { return {}; }
    };
    auto c = std::make_shared<Counting>();
    EndpointPool pool({c}, RetryPolicy{}, 3, 0);
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&] {
        for (int i = 0; i < 5; ++i) pool.chat(user_request("x", 0, false));
      });
    }
    threads.clear();
    CHECK(c->peak.load() <= 3);
    CHECK(c->peak.load() >= 1);
  }

  TEST_CASE("capability names") {
    for (Capability c : {Capability::kChat, Capability::kVision, Capability::kEmbedding}) {
      CHECK(parse_capability(capability_name(c)) == c);
    }
    CHECK_FALSE(parse_capability("telepathy").has_value());
  }
}

TEST_SUITE("mock") {
  TEST_CASE("rules match in order, with optional model") {
    MockFixtures f = MockFixtures::parse(R"({"rules": [
      {"keywords": ["alpha", "beta"], "response": "both"},
      {"keywords": ["alpha"], "model": "m2", "response": "alpha for m2"},
      {"keywords": ["alpha"], "response": "alpha"}
    ]})");
    CHECK(f.match("alpha beta", "m1")->response == "both");
    CHECK(f.match("alpha", "m2")->response == "alpha for m2");
    CHECK(f.match("alpha", "m1")->response == "alpha");
    CHECK(f.match("gamma", "m1") == nullptr);
    CHECK_THROWS_AS(MockFixtures::parse(R"({"rules": [{"keywords": ["a"]}]})"), FormatError);
    CHECK_THROWS_AS(MockFixtures::parse(R"({"rules": {}})"), FormatError);
    CHECK_THROWS_AS(MockFixtures::parse(R"({"rules": [{"keywords": [1], "response": ""}]})"),
                    FormatError);
  }

  TEST_CASE("placeholders") {
    std::uint64_t d = 0x10;
    CHECK(render_mock_response("id {{digest}}", "", d) == "id 0000000000000010");
    CHECK(render_mock_response("{{pick:a|b|c}}", "", 4) == "b");
    CHECK(render_mock_response("{{pick:solo}}", "", 99) == "solo");
    CHECK(render_mock_response("[{{capture:key ([A-D])}}]", "the key B here", d) == "[B]");
    CHECK(render_mock_response("[{{capture:key ([A-D])}}]", "nothing", d) == "[]");
    CHECK(render_mock_response("{{capture:[0-9]+}}", "year 1921", d) == "1921");
    CHECK(render_mock_response("{{unknown}} {{", "", d) == "{{unknown}} {{");
  }

  TEST_CASE("digest depends on model and text") {
    CHECK(mock_digest("m", "t") == hash_fields({"m", "t"}));
    CHECK(mock_digest("m1", "t") != mock_digest("m2", "t"));
  }

  TEST_CASE("embedding matches the documented formula") {
    for (const char* text : {"", "Halden Observatory", "\xE4\xB8\xAD"}) {
      std::mt19937_64 engine(fnv1a64(text));
      std::vector<double> raw(24);
      double norm = 0;
      for (double& v : raw) {
        v = 2.0 * (static_cast<double>(engine() >> 11) * 0x1.0p-53) - 1.0;
        norm += v * v;
      }
      norm = std::sqrt(norm);
      Embedding e = mock_embedding(text, 24);
      REQUIRE(e.size() == 24);
      for (int i = 0; i < 24; ++i) CHECK(e[i] == doctest::Approx(raw[i] / norm).epsilon(1e-12));
      CHECK(e.norm() == doctest::Approx(1.0));
    }
  }

  TEST_CASE("provider replies are pure functions of the request") {
    auto fx = std::make_shared<MockFixtures>(MockFixtures::parse(
        R"({"rules": [{"keywords": ["star"], "response": "{{pick:x|y|z|w}}"}]})"));
    MockProvider a({"mock://", "mock-a", "", Capability::kChat}, fx, 8);
    MockProvider a2({"mock://", "mock-a", "", Capability::kChat}, fx, 8);
    CHECK(a.respond("a star") == a2.respond("a star"));
    CHECK(a.respond("no rule") == "mock:" + to_hex(mock_digest("mock-a", "no rule")));
    ChatRequest req;
    req.messages = {{"system", "one"}, {"user", "star two"}};
    CHECK(a.chat(req).text == a.respond("one\nstar two"));
    auto v = a.embed({"p", "q"});
    CHECK(v.size() == 2);
    CHECK(v[0].size() == 8);
    // Models disagree deterministically across many prompts.
    MockProvider b({"mock://", "mock-b", "", Capability::kChat}, fx, 8);
    int differ = 0;
    for (int i = 0; i < 40; ++i) {
      std::string t = "star " + std::to_string(i);
      differ += a.respond(t) != b.respond(t);
    }
    CHECK(differ > 10);
  }

  TEST_CASE("toy fixtures parse") {
    auto f = MockFixtures::load(testkit::toy_dir() + "/mock_fixtures.json");
    CHECK(f.rules.size() > 20);
  }
}

TEST_SUITE("http") {
  TEST_CASE("chat-completions client against a local server") {
    httplib::Server server;
    std::atomic<int> failures_left{1};
    nlohmann::json last_body;
    std::mutex mu;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard<std::mutex> lock(mu);
        last_body = nlohmann::json::parse(req.body);
      }
      if (req.get_header_value("Authorization") != "Bearer sekrit") {
        res.status = 401;
        return;
      }
      if (failures_left-- > 0) {
        res.status = 503;
        return;
      }
      res.set_content(R"({"choices":[{"message":{"content":"hello"},"finish_reason":"stop"}],
                          "usage":{"prompt_tokens":3,"completion_tokens":1}})",
                      "application/json");
    });
    server.Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"data":[{"index":1,"embedding":[0,1]},{"index":0,"embedding":[1,0]}]})",
                      "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ::setenv("KGSYNTH_TEST_TOKEN", "sekrit", 1);
    std::string base = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    auto http = std::make_shared<HttpProvider>(
        ProviderEndpoint{base, "gpt-test", "KGSYNTH_TEST_TOKEN", Capability::kChat},
        std::chrono::seconds(5));
    EndpointPool pool({http}, RetryPolicy{3, std::chrono::milliseconds(1), 2.0,
                                          std::chrono::milliseconds(2)}, 2, 0);
    ChatRequest req = user_request("say hello", 0.3, true);
    ChatResponse r = pool.chat(req);
    CHECK(r.text == "hello");
    CHECK(r.usage.prompt_tokens == 3);
    {
      std::lock_guard<std::mutex> lock(mu);
      CHECK(last_body["model"] == "gpt-test");
      CHECK(last_body["messages"][0]["content"] == "say hello");
      CHECK(last_body["response_format"]["type"] == "json_object");
    }
    auto e = http->embed({"a", "b"});
    CHECK(e[0][0] == 1.0);
    CHECK(e[1][1] == 1.0);

    ::setenv("KGSYNTH_TEST_TOKEN", "wrong", 1);
    HttpProvider unauth({base, "gpt-test", "KGSYNTH_TEST_TOKEN", Capability::kChat});
    try {
      unauth.chat(req);
      FAIL("expected ProviderError");
    } catch (const ProviderError& err) {
      CHECK_FALSE(err.transient());
    }
    ::unsetenv("KGSYNTH_TEST_TOKEN");
    CHECK_THROWS_AS(HttpProvider({base, "m", "KGSYNTH_TEST_TOKEN", Capability::kChat}), ConfigError);

    server.stop();
    t.join();
    // Nothing listening: transport errors are transient.
    HttpProvider gone({base, "m", "", Capability::kChat}, std::chrono::seconds(1));
    try {
      gone.chat(req);
      FAIL("expected ProviderError");
    } catch (const ProviderError& err) {
      CHECK(err.transient());
    }
  }
}
