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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mala/errors.hpp"
#include "mala/random.hpp"

namespace mala {

// Neumaier-compensated accumulator. Norm and trace sums run over 10^4+
// terms of very different magnitudes.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double v) {
    add(v);
    return *this;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace detail {

// Sum of term(i) for i in [0, n): plain accumulation inside blocks of 256
// terms, compensated accumulation across blocks. Error grows with the block
// length rather than with n.
template <typename Term>
double blocked_sum(std::size_t n, Term&& term) {
  constexpr std::size_t kBlock = 256;
  CompensatedSum total;
  for (std::size_t start = 0; start < n; start += kBlock) {
    const std::size_t end = std::min(n, start + kBlock);
    double a0 = 0.0;
    double a1 = 0.0;
    std::size_t i = start;
    for (; i + 1 < end; i += 2) {
      a0 += term(i);
      a1 += term(i + 1);
    }
    if (i < end) a0 += term(i);
    total.add(a0 + a1);
  }
  return total.value();
}

inline void require_finite(std::span<const double> c, const char* what) {
  for (double v : c) {
    if (!std::isfinite(v)) {
      throw ContractError(std::string(what) + ": non-finite coefficient");
    }
  }
}

}  // namespace detail

/// Coefficients of a function in the Karhunen-Loeve basis of the reference
/// covariance. Coordinate j (1-based in the maths) lives at index j-1. The
/// Tag distinguishes primal fields from dual (gradient) fields.
template <typename Tag>
class Coefficients {
 public:
  Coefficients() = default;
  explicit Coefficients(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    detail::require_finite(coeffs_, "Coefficients");
  }
  Coefficients(std::initializer_list<double> coeffs)
      : Coefficients(std::vector<double>(coeffs)) {}

  static Coefficients zeros(std::size_t n) {
    Coefficients c;
    c.coeffs_.assign(n, 0.0);
    return c;
  }
  // e_j with the 1-based index used in the maths.
  static Coefficients unit(std::size_t n, std::size_t j) {
    if (j < 1 || j > n) throw ContractError("unit: index out of range");
    auto c = zeros(n);
    c.coeffs_[j - 1] = 1.0;
    return c;
  }

  [[nodiscard]] std::size_t dim() const { return coeffs_.size(); }
  [[nodiscard]] std::span<const double> coeffs() const { return coeffs_; }
  // Unchecked write access for algorithm internals; callers keep values finite.
  [[nodiscard]] std::span<double> mutable_coeffs() { return coeffs_; }
  [[nodiscard]] double operator[](std::size_t i) const { return coeffs_[i]; }
  [[nodiscard]] const std::vector<double>& vector() const { return coeffs_; }

  friend bool operator==(const Coefficients&, const Coefficients&) = default;

 private:
  std::vector<double> coeffs_;
};

struct PrimalTag;
struct DualTag;

using SpectralField = Coefficients<PrimalTag>;
using DualField = Coefficients<DualTag>;

/// Exponent r of the Sobolev-like scale ||x||_r^2 = sum j^{2r} x_j^2.
struct SobolevIndex {
  double r = 0.0;
};

/// Eigenvalue sequence lambda_j = j^{-kappa}, j = 1..n_max, of the reference
/// covariance C (whose eigenvalues are lambda_j^2).
class CovarianceSpectrum {
 public:
  CovarianceSpectrum(double kappa, std::size_t n_max) : kappa_(kappa) {
    if (!(kappa > 0.5) || !std::isfinite(kappa)) {
      throw ContractError("CovarianceSpectrum: decay exponent must satisfy kappa > 1/2");
    }
    if (n_max < 1) throw ContractError("CovarianceSpectrum: n_max must be >= 1");
    lambda_.resize(n_max);
    lambda_sq_.resize(n_max);
    inv_lambda_sq_.resize(n_max);
    for (std::size_t i = 0; i < n_max; ++i) {
      const double j = static_cast<double>(i + 1);
      lambda_[i] = std::pow(j, -kappa);
      lambda_sq_[i] = lambda_[i] * lambda_[i];
      inv_lambda_sq_[i] = std::pow(j, 2.0 * kappa);
    }
  }

  [[nodiscard]] double kappa() const { return kappa_; }
  [[nodiscard]] std::size_t n_max() const { return lambda_.size(); }
  [[nodiscard]] std::span<const double> lambdas() const { return lambda_; }
  [[nodiscard]] std::span<const double> lambda_sq() const { return lambda_sq_; }
  [[nodiscard]] std::span<const double> inv_lambda_sq() const { return inv_lambda_sq_; }

  // The truncated covariance has finite H^r trace in the limit iff r < kappa - 1/2.
  [[nodiscard]] bool trace_class_in(SobolevIndex r) const { return r.r < kappa_ - 0.5; }

  void require_dim(std::size_t n, const char* what) const {
    if (n > n_max()) {
      throw ContractError(std::string(what) + ": dimension exceeds spectrum length");
    }
  }

 private:
  double kappa_;
  std::vector<double> lambda_;
  std::vector<double> lambda_sq_;
  std::vector<double> inv_lambda_sq_;
};

/// Weights j^{2r} for j = 1..n.
inline std::vector<double> sobolev_weights(SobolevIndex r, std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(static_cast<double>(i + 1), 2.0 * r.r);
  return w;
}

namespace detail {

inline double weighted_dot(std::span<const double> w, std::span<const double> x,
                           std::span<const double> y) {
  return blocked_sum(x.size(), [&](std::size_t i) { return w[i] * x[i] * y[i]; });
}

inline double weighted_sq(std::span<const double> w, std::span<const double> x) {
  return weighted_dot(w, x, x);
}

}  // namespace detail

inline double sobolev_inner(const SpectralField& x, const SpectralField& y, SobolevIndex r) {
  if (x.dim() != y.dim()) throw ContractError("sobolev_inner: dimension mismatch");
  CompensatedSum acc;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    acc.add(std::pow(static_cast<double>(i + 1), 2.0 * r.r) * x[i] * y[i]);
  }
  return acc.value();
}

inline double sobolev_norm_sq(const SpectralField& x, SobolevIndex r) {
  return sobolev_inner(x, x, r);
}

/// ||x||_C^2 = sum lambda_j^{-2} x_j^2.
inline double cameron_martin_norm_sq(const SpectralField& x, const CovarianceSpectrum& spec) {
  spec.require_dim(x.dim(), "cameron_martin_norm_sq");
  return detail::weighted_sq(spec.inv_lambda_sq(), x.coeffs());
}

/// C^power x, coordinatewise lambda_j^{2 power} x_j.
inline SpectralField covariance_apply(const SpectralField& x, const CovarianceSpectrum& spec,
                                      double power) {
  spec.require_dim(x.dim(), "covariance_apply");
  auto out = SpectralField::zeros(x.dim());
  auto o = out.mutable_coeffs();
  const auto lam = spec.lambdas();
  for (std::size_t i = 0; i < x.dim(); ++i) o[i] = std::pow(lam[i], 2.0 * power) * x[i];
  return out;
}

/// Draw from the truncated reference measure N(0, C^N): x_j = lambda_j xi_j.
template <RandomSource Rng>
SpectralField sample_reference(std::size_t n, const CovarianceSpectrum& spec, Rng& rng) {
  if (n < 1) throw ContractError("sample_reference: N must be >= 1");
  spec.require_dim(n, "sample_reference");
  auto out = SpectralField::zeros(n);
  auto o = out.mutable_coeffs();
  const auto lam = spec.lambdas();
  for (std::size_t i = 0; i < n; ++i) o[i] = lam[i] * rng.normal();
  return out;
}

/// Partial sum sum_{j<=n} lambda_j^2 j^{2r} of the H^r trace of C_r.
inline double trace_sobolev(const CovarianceSpectrum& spec, SobolevIndex r, std::size_t n) {
  if (n < 1) throw ContractError("trace_sobolev: N must be >= 1");
  // Closed-form lambda keeps this usable beyond the precomputed range.
  CompensatedSum acc;
  const double e = 2.0 * r.r - 2.0 * spec.kappa();
  for (std::size_t j = 1; j <= n; ++j) acc.add(std::pow(static_cast<double>(j), e));
  return acc.value();
}

/// P^N x: keeps the first min(n, dim) coordinates.
inline SpectralField project(const SpectralField& x, std::size_t n) {
  const auto keep = std::min(n, x.dim());
  return SpectralField(std::vector<double>(x.coeffs().begin(), x.coeffs().begin() + keep));
}

}  // namespace mala
