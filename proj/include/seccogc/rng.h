// Copyright 2026 The SecCoGC Authors
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

// Counter-based random streams. Every draw is a pure function of
// (key, counter), so results do not depend on draw order across streams or on
// the standard library implementation.

#ifndef SECCOGC_RNG_H_
#define SECCOGC_RNG_H_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>

namespace seccogc {

// Stream tags keep independent consumers of the same seed apart.
enum class Stream : std::uint64_t {
  kCode = 0x636f6465,
  kGenerator = 0x67656e,
  kKeys = 0x6b657973,
  kLinks = 0x6c696e6b,
  kTraining = 0x747261696e,
  kData = 0x64617461,
  kMonteCarlo = 0x6d63,
};

constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Folds a seed and a list of integer coordinates into one 64-bit key.
constexpr std::uint64_t DeriveKey(std::uint64_t seed,
                                  std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = SplitMix64(seed);
  for (std::uint64_t p : parts) h = SplitMix64(h ^ SplitMix64(p + 0x51ed27));
  return h;
}

// Uniform in [0, 1) with 53 random bits.
constexpr double UniformAt(std::uint64_t key, std::uint64_t counter) {
  std::uint64_t bits = SplitMix64(key ^ SplitMix64(counter));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// A sequential view over one counter-based stream. Copyable; copies continue
// independently from the same position.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> parts)
      : key_(DeriveKey(seed, parts)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return SplitMix64(key_ ^ SplitMix64(counter_++)); }

  double Uniform() { return UniformAt(key_, counter_++); }

  // Box-Muller; both uniforms come from consecutive counters.
  double Normal() {
    double u1 = Uniform();
    double u2 = Uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Marsaglia-Tsang, with the shape < 1 boost.
  double Gamma(double shape) {
    if (shape < 1.0) {
      double g = Gamma(shape + 1.0);
      double u = Uniform();
      if (u <= 0.0) u = 0x1.0p-53;
      return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x = Normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = Uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace seccogc

#endif  // SECCOGC_RNG_H_
