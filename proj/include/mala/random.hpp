// Copyright 2026 The mala-lab Authors
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

#include <concepts>
#include <cstdint>
#include <array>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace mala {

// Anything that yields standard normal and Uniform(0,1) variates. Algorithms
// are templated on this so tests can substitute scripted streams.
template <typename R>
concept RandomSource = requires(R& r) {
  { r.normal() } -> std::convertible_to<double>;
  { r.uniform() } -> std::convertible_to<double>;
};

/// xoshiro256++ (Blackman & Vigna), seeded through splitmix64. Satisfies
/// UniformRandomBitGenerator. Chosen over mt19937_64 because normal draws
/// dominate chain cost and this engine is about three times faster.
class Xoshiro256PlusPlus {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256PlusPlus(std::uint64_t seed) {
    for (auto& word : state_) word = splitmix64(seed);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const result_type out = rotl(state_[0] + state_[3], 23) + state_[0];
    const result_type t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return out;
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static result_type rotl(result_type x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

// Seeded random stream with platform-independent output: the engine is fully
// specified and both distributions are header-defined in Boost (ziggurat
// normal), unlike the implementation-defined std ones.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

 private:
  Xoshiro256PlusPlus engine_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
  boost::random::uniform_01<double> uniform_;
};

static_assert(RandomSource<RandomStream>);

}  // namespace mala
