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

#include <array>
#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "mala/experiment/rational.hpp"

namespace mala::experiment {

using Sha256Digest = std::array<unsigned char, 32>;

inline Sha256Digest sha256(std::string_view data) {
  Sha256Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32) {
    throw std::runtime_error("sha256: digest failed");
  }
  return out;
}

inline std::string to_hex(const Sha256Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (unsigned char c : d) {
    s.push_back(kHex[c >> 4]);
    s.push_back(kHex[c & 0xf]);
  }
  return s;
}

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

/// Per-cell seed: first 8 bytes (big-endian) of SHA-256 over a versioned
/// text encoding of the tuple. The encoding is frozen; changing it changes
/// every stored result.
inline std::uint64_t seed_for(std::uint64_t master_seed, std::uint64_t n, const Rational& gamma,
                              double ell, std::uint64_t replica) {
  const std::string key = "mala-lab/seed/v1|" + std::to_string(master_seed) + "|" + std::to_string(n) +
                          "|" + gamma.to_string() + "|" + format_double(ell) + "|" +
                          std::to_string(replica);
  const auto d = sha256(key);
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed = (seed << 8) | d[static_cast<std::size_t>(i)];
  return seed;
}

}  // namespace mala::experiment
