// Copyright 2026 The curvmia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CURVMIA_RANDOM_H_
#define CURVMIA_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace curvmia {

// splitmix64 finalizer (Steele, Lea, Flood 2014). Bijective on 64 bits.
uint64_t Mix64(uint64_t x);

// Stable seed derivation: Mix64(master ^ Mix64(stream * kStreamMul + index)).
// Every model, split and probe set gets its own seed from here, never from a
// shared generator, so results do not depend on execution order.
uint64_t DeriveSeed(uint64_t master, uint64_t index, uint64_t stream = 0);

// Named streams for DeriveSeed.
inline constexpr uint64_t kStreamShadow = 1;
inline constexpr uint64_t kStreamTarget = 2;
inline constexpr uint64_t kStreamSplit = 3;
inline constexpr uint64_t kStreamSweep = 4;
inline constexpr uint64_t kStreamReference = 5;
inline constexpr uint64_t kStreamProbe = 6;
inline constexpr uint64_t kStreamJitter = 7;
inline constexpr uint64_t kStreamShuffle = 8;

// Generator with distribution code written out explicitly, so that streams
// are identical across standard library implementations (the std::
// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Standard normal (Box-Muller, second variate cached).
  double Normal();
  // +1 or -1 with equal probability.
  double Rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }
  // Uniform integer in [0, n), unbiased. n > 0.
  uint64_t Below(uint64_t n);

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace curvmia

#endif  // CURVMIA_RANDOM_H_
