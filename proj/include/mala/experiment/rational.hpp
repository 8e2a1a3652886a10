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

#include <charconv>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>

namespace mala::experiment {

/// Exact rational used for scaling exponents, so "1/3" stays exactly 1/3 in
/// configs, filenames and row matching.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) { normalise(); }

  // Accepts "p/q", integers and plain decimals ("0.45" -> 9/20).
  static std::optional<Rational> parse(std::string_view text) {
    const auto slash = text.find('/');
    if (slash != std::string_view::npos) {
      const auto num = parse_int(text.substr(0, slash));
      const auto den = parse_int(text.substr(slash + 1));
      if (!num || !den || *den == 0) return std::nullopt;
      return Rational(*num, *den);
    }
    const auto dot = text.find('.');
    if (dot == std::string_view::npos) {
      const auto num = parse_int(text);
      if (!num) return std::nullopt;
      return Rational(*num, 1);
    }
    const auto frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 15) return std::nullopt;
    for (char c : frac) {
      if (c < '0' || c > '9') return std::nullopt;
    }
    std::string digits(text.substr(0, dot));
    const bool negative = !digits.empty() && digits.front() == '-';
    if (digits.empty() || digits == "-" || digits == "+") digits += "0";
    const auto whole = parse_int(digits);
    const auto part = parse_int(frac);
    if (!whole || !part) return std::nullopt;
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::int64_t mag = (*whole < 0 ? -*whole : *whole) * den + *part;
    return Rational(negative ? -mag : mag, den);
  }

  [[nodiscard]] std::int64_t num() const { return num_; }
  [[nodiscard]] std::int64_t den() const { return den_; }
  [[nodiscard]] double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  [[nodiscard]] std::string to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend bool operator==(const Rational&, const Rational&) = default;
  friend auto operator<=>(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num_) * b.den_ <=> static_cast<__int128>(b.num_) * a.den_;
  }

 private:
  static std::optional<std::int64_t> parse_int(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
  }

  void normalise() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const auto g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace mala::experiment
