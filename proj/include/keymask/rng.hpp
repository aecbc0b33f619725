// Copyright 2026 The keymask Authors.
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

#pragma once

#include <cstdint>
#include <string_view>

namespace keymask {

/// 64-bit FNV-1a. Stable across platforms; used to key per-document streams.
constexpr std::uint64_t Fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t Mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream. Output i is a pure function of
/// (key, i), so streams keyed by (seed, document) or (seed, resample) can be
/// consumed on any thread in any order with identical results.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(Mix64(Mix64(seed) ^ (stream + 0x9e3779b97f4a7c15ULL))) {}

  static CounterRng ForDocument(std::uint64_t seed, std::string_view doc_id) noexcept {
    return CounterRng(seed, Fnv1a64(doc_id));
  }

  std::uint64_t NextU64() noexcept {
    return Mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double NextUnit() noexcept {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [0, bound). bound must be > 0. Rejection sampling keeps the
  /// draw unbiased; each rejected value consumes one counter step.
  std::uint64_t NextBelow(std::uint64_t bound) noexcept {
    const std::uint64_t limit = -bound % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t x = NextU64();
      if (x >= limit) return x % bound;
    }
  }

  bool Bernoulli(double p) noexcept { return NextUnit() < p; }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace keymask
