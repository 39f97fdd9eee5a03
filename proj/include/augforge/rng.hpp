// include/augforge/rng.hpp

// Copyright 2026  Augforge Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef AUGFORGE_RNG_HPP_
#define AUGFORGE_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "augforge/common.hpp"

namespace augforge {

// SplitMix64 generator. Every stochastic stage in the library draws from this
// one engine so that seeded runs are bit-identical across platforms; the
// standard <random> distributions are avoided on purpose (their output is
// implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t NextU64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double NextDouble() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n). Lemire multiply-shift; deterministic, no loop.
  uint64_t NextBelow(uint64_t n) {
    AF_CHECK(n > 0, "NextBelow(0)");
    return static_cast<uint64_t>(
        (static_cast<__uint128_t>(NextU64()) * static_cast<__uint128_t>(n)) >> 64);
  }

  // Uniform integer on [lo, hi] inclusive.
  int64_t NextInt(int64_t lo, int64_t hi) {
    AF_CHECK(lo <= hi, "NextInt: empty range [", lo, ", ", hi, "]");
    return lo + static_cast<int64_t>(NextBelow(static_cast<uint64_t>(hi - lo) + 1));
  }

  bool Bernoulli(double p) { return NextDouble() < p; }

  // Box-Muller; consumes two uniforms per call.
  double NextNormal() {
    const double u1 = 1.0 - NextDouble();  // (0, 1]
    const double u2 = NextDouble();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(NextBelow(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent stream from (seed, stream). Part of the stable
  // on-disk behavior: augmentation plans and batch draws are keyed by this.
  static uint64_t Derive(uint64_t seed, uint64_t stream) {
    Rng r(seed ^ (0x632BE59BD9B4E019ULL * (stream + 1)));
    return r.NextU64();
  }

 private:
  uint64_t state_;
};

// Stream tags for Rng::Derive; one per stochastic pipeline stage.
namespace seed_stream {
constexpr uint64_t kModelInit = 1;
constexpr uint64_t kTrain = 2;
constexpr uint64_t kAugmentSample = 3;
constexpr uint64_t kSpecAugment = 4;
constexpr uint64_t kFinetune = 5;
}  // namespace seed_stream

}  // namespace augforge

#endif  // AUGFORGE_RNG_HPP_
