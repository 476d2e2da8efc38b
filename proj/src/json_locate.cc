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

#include "kgsynth/json_locate.h"

#include <iterator>
#include <vector>

#include "kgsynth/errors.h"

namespace kgsynth {

namespace {

using nlohmann::json;

// Character iterator that publishes how far the parser has read.
struct CountingIterator {
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  const char* p = nullptr;
  const char* base = nullptr;
  std::size_t* position = nullptr;

  reference operator*() const { return *p; }
  CountingIterator& operator++() {
    ++p;
    if (position) *position = static_cast<std::size_t>(p - base);
    return *this;
  }
  CountingIterator operator++(int) {
    CountingIterator tmp = *this;
    ++*this;
    return tmp;
  }
  bool operator==(const CountingIterator& o) const { return p == o.p; }
  bool operator!=(const CountingIterator& o) const { return p != o.p; }
};

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

class LocatingSax {
 public:
  LocatingSax(LocatedJson& out, std::string_view text, const std::size_t& position)
      : out_(out), dom_(out.value, true), text_(text), position_(position) {}

  bool null() { return scalar([&] { return dom_.null(); }); }
  bool boolean(bool v) { return scalar([&] { return dom_.boolean(v); }); }
  bool number_integer(json::number_integer_t v) {
    return scalar([&] { return dom_.number_integer(v); });
  }
  bool number_unsigned(json::number_unsigned_t v) {
    return scalar([&] { return dom_.number_unsigned(v); });
  }
  bool number_float(json::number_float_t v, const json::string_t& s) {
    return scalar([&] { return dom_.number_float(v, s); });
  }
  bool string(json::string_t& v) {
    return scalar([&] { return dom_.string(v); });
  }
  bool binary(json::binary_t& v) {
    return scalar([&] { return dom_.binary(v); });
  }
  bool start_object(std::size_t n) {
    std::string ptr = begin_value();
    frames_.push_back({ptr, false, 0, {}});
    consumed();
    return dom_.start_object(n);
  }
  bool key(json::string_t& k) {
    frames_.back().key = k;
    out_.offsets[frames_.back().pointer + "/" + escape_token(k)] = token_start();
    consumed();
    return dom_.key(k);
  }
  bool end_object() {
    frames_.pop_back();
    end_value();
    consumed();
    return dom_.end_object();
  }
  bool start_array(std::size_t n) {
    std::string ptr = begin_value();
    frames_.push_back({ptr, true, 0, {}});
    consumed();
    return dom_.start_array(n);
  }
  bool end_array() {
    frames_.pop_back();
    end_value();
    consumed();
    return dom_.end_array();
  }
  bool parse_error(std::size_t position, const std::string& /*token*/,
                   const nlohmann::detail::exception& ex) {
    throw FormatError(ex.what(), "", position == 0 ? 0 : position - 1);
  }

 private:
  struct Frame {
    std::string pointer;
    bool is_array;
    std::size_t index;
    std::string key;
  };

  // The lexer reads one character past a number, so the current position is
  // not a reliable token start. Instead: the first character after the
  // previous event that is not whitespace or a separator.
  std::size_t token_start() const {
    std::size_t i = cursor_;
    while (i < text_.size() && (text_[i] == ' ' || text_[i] == '\t' || text_[i] == '\n' ||
                                text_[i] == '\r' || text_[i] == ':' || text_[i] == ',')) {
      ++i;
    }
    return i;
  }

  void consumed() { cursor_ = position_; }

  std::string begin_value() {
    std::string ptr;
    if (!frames_.empty()) {
      const Frame& top = frames_.back();
      ptr = top.pointer + "/" +
            (top.is_array ? std::to_string(top.index) : escape_token(top.key));
    }
    out_.offsets[ptr] = token_start();
    return ptr;
  }

  void end_value() {
    if (!frames_.empty() && frames_.back().is_array) ++frames_.back().index;
  }

  template <class F>
  bool scalar(F&& f) {
    begin_value();
    bool ok = f();
    end_value();
    consumed();
    return ok;
  }

  LocatedJson& out_;
  nlohmann::detail::json_sax_dom_parser<json> dom_;
  std::string_view text_;
  const std::size_t& position_;
  std::size_t cursor_ = 0;
  std::vector<Frame> frames_;
};

}  // namespace

std::size_t LocatedJson::offset_of(std::string pointer) const {
  while (true) {
    auto it = offsets.find(pointer);
    if (it != offsets.end()) return it->second;
    if (pointer.empty()) return 0;
    auto slash = pointer.rfind('/');
    pointer = slash == std::string::npos ? "" : pointer.substr(0, slash);
  }
}

LocatedJson parse_located(std::string_view text) {
  LocatedJson out;
  std::size_t position = 0;
  CountingIterator first{text.data(), text.data(), &position};
  CountingIterator last{text.data() + text.size(), text.data(), nullptr};
  LocatingSax sax(out, text, position);
  json::sax_parse(first, last, &sax);
  return out;
}

}  // namespace kgsynth
