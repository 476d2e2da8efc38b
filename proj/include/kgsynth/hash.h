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

#ifndef KGSYNTH_HASH_H_
#define KGSYNTH_HASH_H_

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace kgsynth {

// 64-bit FNV-1a. Stable across platforms and runs; used for content-derived
// ids, mock responses and seed derivation.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t state = kFnvOffset) {
  for (unsigned char c : data) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

// Hashes a sequence of fields with a 0x1f separator so that ("ab","c") and
// ("a","bc") differ.
std::uint64_t hash_fields(std::initializer_list<std::string_view> fields);

// Lower-case, zero-padded 16 digit hex.
std::string to_hex(std::uint64_t value);

// SplitMix64 finalizer; spreads low-entropy seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent stream seed for (global_seed, stream name, index).
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stream,
                          std::uint64_t index);

}  // namespace kgsynth

#endif  // KGSYNTH_HASH_H_
