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

// Test-only oracles and helpers. Everything here is computed independently
// of the library code paths it is used to check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mala/random.hpp"
#include "mala/spectral_space.hpp"

namespace mala::testing {

/// RandomSource replaying fixed sequences (cycled). Lets tests force xi and
/// the acceptance uniform.
class ScriptedSource {
 public:
  ScriptedSource(std::vector<double> normals, std::vector<double> uniforms)
      : normals_(std::move(normals)), uniforms_(std::move(uniforms)) {
    if (normals_.empty()) normals_.push_back(0.0);
    if (uniforms_.empty()) uniforms_.push_back(0.5);
  }
  double normal() { return normals_[ni_++ % normals_.size()]; }
  double uniform() { return uniforms_[ui_++ % uniforms_.size()]; }
  [[nodiscard]] std::size_t normals_used() const { return ni_; }
  [[nodiscard]] std::size_t uniforms_used() const { return ui_; }

 private:
  std::vector<double> normals_;
  std::vector<double> uniforms_;
  std::size_t ni_ = 0;
  std::size_t ui_ = 0;
};
static_assert(RandomSource<ScriptedSource>);

inline double sum_ld(const std::vector<long double>& terms) {
  long double acc = 0.0L;
  for (auto t : terms) acc += t;
  return static_cast<double>(acc);
}

inline double mean(const std::vector<double>& v) {
  long double acc = 0.0L;
  for (double x : v) acc += x;
  return static_cast<double>(acc / static_cast<long double>(v.size()));
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  long double acc = 0.0L;
  for (double x : v) acc += (x - m) * (x - m);
  return static_cast<double>(acc / static_cast<long double>(v.size() - 1));
}

inline double std_error(const std::vector<double>& v) {
  return std::sqrt(variance(v) / static_cast<double>(v.size()));
}

/// Standard error of the sample variance, sqrt((m4 - s^4) / n).
inline double variance_std_error(const std::vector<double>& v) {
  const double m = mean(v);
  long double m2 = 0.0L;
  long double m4 = 0.0L;
  for (double x : v) {
    const long double d = x - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const auto n = static_cast<long double>(v.size());
  m2 /= n;
  m4 /= n;
  return static_cast<double>(std::sqrt((m4 - m2 * m2) / n));
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Survival function of the Kolmogorov distribution,
/// P(K > t) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2).
inline double kolmogorov_survival(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;  // series converges slowly; value is 1 to double precision
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// One-sample Kolmogorov-Smirnov test with the Stephens small-sample
/// correction of the asymptotic distribution.
inline KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_test: empty sample");
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

/// Quantile of the chi-square distribution with k degrees of freedom by
/// the Wilson-Hilferty approximation, adequate for k >= 3.
inline double chi_square_quantile_wh(double k, double z) {
  const double c = 2.0 / (9.0 * k);
  const double t = 1.0 - c + z * std::sqrt(c);
  return k * t * t * t;
}

inline std::vector<double> standard_normals(std::size_t n, RandomStream& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

/// Field with coordinates scale * N(0,1) * j^{-decay}.
inline SpectralField random_field(std::size_t n, RandomStream& rng, double scale = 1.0, double decay = 0.0) {
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = scale * rng.normal() * std::pow(static_cast<double>(j + 1), -decay);
  return SpectralField(std::move(v));
}

// a x + y
inline SpectralField axpy(double a, const SpectralField& x, const SpectralField& y) {
  std::vector<double> v(x.dim());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * x[i] + y[i];
  return SpectralField(std::move(v));
}

}  // namespace mala::testing
