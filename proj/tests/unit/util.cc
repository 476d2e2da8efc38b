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

#include <cmath>
#include <functional>
#include <set>

#include "doctest.h"
#include "kgsynth/embedding.h"
#include "kgsynth/errors.h"
#include "kgsynth/hash.h"
#include "kgsynth/json_locate.h"
#include "kgsynth/parallel.h"
#include "kgsynth/rng.h"
#include "kgsynth/text.h"
#include "testkit.h"

using namespace kgsynth;

TEST_SUITE("util") {
  TEST_CASE("fnv1a64 matches published vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(to_hex(0xabcULL) == "0000000000000abc");
  }

  TEST_CASE("field hashing separates boundaries") {
    CHECK(hash_fields({"ab", "c"}) != hash_fields({"a", "bc"}));
    CHECK(hash_fields({"x"}) == hash_fields({"x"}));
  }

  TEST_CASE("derived seeds are distinct per stream and index") {
    std::set<std::uint64_t> seen;
    for (const char* s : {"acs/ST", "acs/SC", "trace/ST"}) {
      for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(7, s, i));
    }
    CHECK(seen.size() == 150);
    CHECK(derive_seed(7, "x", 1) == derive_seed(7, "x", 1));
    CHECK(derive_seed(7, "x", 1) != derive_seed(8, "x", 1));
  }

  TEST_CASE("rng is reproducible and in range") {
    Rng a(11), b(11);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Rng r(5);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) ++hits[r.uniform_index(7)];
    for (int h : hits) CHECK(h > 800);
    for (int i = 0; i < 1000; ++i) {
      auto v = r.uniform_int(-3, 3);
      CHECK(v >= -3);
      CHECK(v <= 3);
      double u = r.uniform01();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
    auto s = r.sample(std::vector<int>{1, 2, 3, 4, 5}, 3);
    CHECK(std::set<int>(s.begin(), s.end()).size() == 3);
    CHECK(r.sample(std::vector<int>{1, 2}, 5).size() == 2);
  }

  TEST_CASE("utf8 helpers") {
    CHECK(utf8_length("abc") == 3);
    CHECK(utf8_length("a\xC3\xA9\xE4\xB8\xAD") == 3);
    CHECK(last_non_space_code_point("done\xE3\x80\x82  \n") == "\xE3\x80\x82");
    CHECK(last_non_space_code_point("   ").empty());
  }

  TEST_CASE("string helpers") {
    CHECK(trim("  x y \n") == "x y");
    CHECK(ascii_lower("AbC") == "abc");
    CHECK(replace_all("aXbXc", "X", "--") == "a--b--c");
    CHECK(split_whitespace(" a  b\tc\n") == std::vector<std::string>{"a", "b", "c"});
    CHECK(join({"a", "b"}, ", ") == "a, b");
  }

  TEST_CASE("balanced object extraction respects strings") {
    CHECK(extract_balanced_object("Sure! {\"a\": \"}\"} trailing") == "{\"a\": \"}\"}");
    CHECK(extract_balanced_object("x {\"a\": {\"b\": 1}} y") == "{\"a\": {\"b\": 1}}");
    CHECK_FALSE(extract_balanced_object("no braces").has_value());
    CHECK_FALSE(extract_balanced_object("{ unterminated").has_value());
  }

  TEST_CASE("located json reports byte offsets") {
    LocatedJson j = parse_located("{\"a\": [1, {\"b\": true}]}");
    CHECK(j.value["a"][1]["b"] == true);
    CHECK(j.offset_of("/a/1/b") > j.offset_of("/a"));
    CHECK(j.offset_of("/a/1/zzz") == j.offset_of("/a/1"));
    CHECK(j.offset_of("/a") == 6);
    CHECK(j.offset_of("/a/0") == 7);
    CHECK(j.offset_of("/a/1") == 10);
    CHECK(j.offset_of("/a/1/b") == 16);
    try {
      parse_located("{\"a\": [1, }");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset() != FormatError::kNone);
      CHECK(e.offset() <= 11);
    }
  }

  TEST_CASE("located offsets land on the value's first byte") {
    Rng rng(31);
    std::function<nlohmann::json(int)> gen = [&](int depth) -> nlohmann::json {
      switch (depth > 3 ? rng.uniform_index(4) : rng.uniform_index(6)) {
        case 0: return static_cast<std::int64_t>(rng.uniform_int(-500, 500));
        case 1: return rng.uniform_index(2) == 1;
        case 2: return testkit::random_word(rng, true);
        case 3: return rng.uniform_index(2) ? nlohmann::json(nullptr) : nlohmann::json(0.25);
        case 4: {
          nlohmann::json a = nlohmann::json::array();
          for (std::size_t i = rng.uniform_index(4); i > 0; --i) a.push_back(gen(depth + 1));
          return a;
        }
        default: {
          nlohmann::json o = nlohmann::json::object();
          for (std::size_t i = rng.uniform_index(4); i > 0; --i) {
            o[testkit::random_word(rng, true)] = gen(depth + 1);
          }
          return o;
        }
      }
    };
    for (int trial = 0; trial < 200; ++trial) {
      nlohmann::json doc = gen(0);
      std::string text = doc.dump(static_cast<int>(rng.uniform_index(3)) - 1);
      LocatedJson located = parse_located(text);
      std::function<void(const nlohmann::json&, const std::string&)> walk =
          [&](const nlohmann::json& v, const std::string& ptr) {
            std::size_t off = located.offset_of(ptr);
            REQUIRE(off < text.size());
            if (v.is_object()) {
              CHECK(text[off] == '{');
              for (const auto& [k, child] : v.items()) {
                walk(child, ptr + "/" + replace_all(replace_all(k, "~", "~0"), "/", "~1"));
              }
            } else if (v.is_array()) {
              CHECK(text[off] == '[');
              for (std::size_t i = 0; i < v.size(); ++i) walk(v[i], ptr + "/" + std::to_string(i));
            } else {
              CHECK(text.compare(off, v.dump().size(), v.dump()) == 0);
            }
          };
      walk(doc, "");
    }
  }

  TEST_CASE("parallel_map keeps order and rethrows the lowest failure") {
    auto r = parallel_map(100, 8, [](std::size_t i) { return i * i; });
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i] == i * i);
    try {
      parallel_map(50, 4, [](std::size_t i) -> int {
        if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
        return 0;
      });
      FAIL("expected exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "7");
    }
    CHECK(parallel_map(0, 4, [](std::size_t) { return 1; }).empty());
  }
}

TEST_SUITE("embedding") {
  TEST_CASE("cosine similarity") {
    Embedding a(3), b(3), z(3);
    a << 1, 0, 0;
    b << 1, 1, 0;
    z.setZero();
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, b) == doctest::Approx(std::sqrt(0.5)));
    CHECK(cosine_similarity(a, z) == 0.0);
  }

  TEST_CASE("similarity matrix is symmetric with unit diagonal") {
    std::vector<Embedding> v;
    Rng rng(1);
    for (int i = 0; i < 6; ++i) {
      Embedding e(5);
      for (int d = 0; d < 5; ++d) e[d] = rng.uniform01() - 0.5;
      v.push_back(e);
    }
    auto m = similarity_matrix(v);
    for (int i = 0; i < 6; ++i) {
      CHECK(m(i, i) == doctest::Approx(1.0));
      for (int j = 0; j < 6; ++j) CHECK(m(i, j) == doctest::Approx(m(j, i)));
    }
  }

  TEST_CASE("single-link clusters are transitive and respect compatibility") {
    Embedding a(2), b(2), c(2), d(2);
    a << 1, 0;
    b << 1, 0.1;
    c << 1, 0.2;
    d << 0, 1;
    auto all = [](std::size_t, std::size_t) { return true; };
    auto cl = single_link_clusters<double>({a, b, c, d}, 0.99, all);
    REQUIRE(cl.size() == 2);
    CHECK(cl[0] == std::vector<std::size_t>{0, 1, 2});
    CHECK(cl[1] == std::vector<std::size_t>{3});
    auto none = [](std::size_t, std::size_t) { return false; };
    CHECK(single_link_clusters<double>({a, b, c, d}, 0.99, none).size() == 4);
  }
}
