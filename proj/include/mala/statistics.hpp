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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "mala/errors.hpp"

// Small statistical helpers shared by the diagnostics, the experiment runner
// and the tests.
namespace mala::stats {

template <typename T>
double mean(std::span<const T> v) {
  if (v.empty()) throw ContractError("mean: empty sample");
  double acc = 0.0;
  for (const auto& x : v) acc += static_cast<double>(x);
  return acc / static_cast<double>(v.size());
}

// Unbiased sample variance.
template <typename T>
double variance(std::span<const T> v) {
  if (v.size() < 2) throw ContractError("variance: need at least two values");
  const double m = mean(v);
  double acc = 0.0;
  for (const auto& x : v) {
    const double d = static_cast<double>(x) - m;
    acc += d * d;
  }
  return acc / static_cast<double>(v.size() - 1);
}

template <typename T>
double standard_error(std::span<const T> v) {
  return std::sqrt(variance(v) / static_cast<double>(v.size()));
}

// Standard error of the mean of a correlated series by non-overlapping batch
// means. Falls back to the iid formula when the series is too short.
template <typename T>
double batch_means_standard_error(std::span<const T> v, std::size_t n_batches = 20) {
  if (v.size() < 2) return 0.0;
  const std::size_t size = v.size() / n_batches;
  if (n_batches < 2 || size < 2) return standard_error(v);
  std::vector<double> means(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    double acc = 0.0;
    for (std::size_t i = b * size; i < (b + 1) * size; ++i) acc += static_cast<double>(v[i]);
    means[b] = acc / static_cast<double>(size);
  }
  return standard_error(std::span<const double>(means));
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("least_squares: need >= 2 paired points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw ContractError("least_squares: degenerate abscissae");
  return {sxy / sxx, my - sxy / sxx * mx};
}

// Sample autocorrelation at lags 0..max_lag (mean removed, biased
// normalisation so the sequence is positive semi-definite).
inline std::vector<double> autocorrelation(std::span<const double> v, std::size_t max_lag) {
  const std::size_t n = v.size();
  if (n < 2) throw ContractError("autocorrelation: series too short");
  max_lag = std::min(max_lag, n - 1);
  const double m = mean(v);
  std::vector<double> c(v.size());
  for (std::size_t i = 0; i < n; ++i) c[i] = v[i] - m;
  double c0 = 0.0;
  for (double x : c) c0 += x * x;
  std::vector<double> acf(max_lag + 1, 0.0);
  if (c0 == 0.0) return acf;
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) acc += c[i] * c[i + k];
    acf[k] = acc / c0;
  }
  return acf;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw ContractError("median: empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace mala::stats
