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

#include "kgsynth/hash.h"

#include <array>

namespace kgsynth {

std::uint64_t hash_fields(std::initializer_list<std::string_view> fields) {
  std::uint64_t state = kFnvOffset;
  for (std::string_view f : fields) {
    state = fnv1a64(f, state);
    state = fnv1a64(std::string_view("\x1f", 1), state);
  }
  return state;
}

std::string to_hex(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stream,
                          std::uint64_t index) {
  std::array<char, 8> seed_bytes{};
  for (int i = 0; i < 8; ++i) {
    seed_bytes[i] = static_cast<char>((global_seed >> (8 * i)) & 0xff);
  }
  std::uint64_t h = fnv1a64(std::string_view(seed_bytes.data(), 8));
  h = fnv1a64(stream, h);
  return mix64(h ^ mix64(index));
}

}  // namespace kgsynth
