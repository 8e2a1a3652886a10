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

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mala/errors.hpp"
#include "mala/random.hpp"
#include "mala/spectral_space.hpp"

namespace mala {

/// Catalogue of change-of-measure functionals Psi.
enum class PsiKind {
  kZero,              // Psi = 0, pure Gaussian target
  kQuadraticSobolev,  // Psi = (a/2) ||x||_s^2
  kSmoothNonlinear,   // Psi = a (sqrt(1 + ||x||_s^2) - 1)
};

inline std::string_view to_string(PsiKind k) {
  switch (k) {
    case PsiKind::kZero: return "zero";
    case PsiKind::kQuadraticSobolev: return "quadratic-sobolev";
    case PsiKind::kSmoothNonlinear: return "smooth-nonlinear";
  }
  return "unknown";
}

/// Target pi^N with density proportional to exp(-||x||_C^2 / 2 - Psi(x)).
/// Immutable; share freely between chains.
class TargetModel {
 public:
  TargetModel(CovarianceSpectrum spec, SobolevIndex s, PsiKind kind, double a = 1.0)
      : spec_(std::move(spec)), s_(s), kind_(kind), a_(a) {
    if (!(s.r >= 0.0) || !(s.r < spec_.kappa() - 0.5)) {
      throw ContractError("TargetModel: need 0 <= s < kappa - 1/2");
    }
    if (!(a >= 0.0) || !std::isfinite(a)) throw ContractError("TargetModel: weight a must be >= 0");
    s_weights_ = sobolev_weights(s_, spec_.n_max());
    cov_s_weights_.resize(spec_.n_max());
    const auto lam_sq = spec_.lambda_sq();
    for (std::size_t i = 0; i < s_weights_.size(); ++i) cov_s_weights_[i] = lam_sq[i] * s_weights_[i];
  }

  [[nodiscard]] const CovarianceSpectrum& spectrum() const { return spec_; }
  [[nodiscard]] SobolevIndex s() const { return s_; }
  [[nodiscard]] PsiKind kind() const { return kind_; }
  [[nodiscard]] double weight() const { return a_; }
  [[nodiscard]] bool gaussian() const { return kind_ != PsiKind::kSmoothNonlinear; }
  [[nodiscard]] bool psi_vanishes() const { return kind_ == PsiKind::kZero || a_ == 0.0; }

  // j^{2s}
  [[nodiscard]] std::span<const double> s_weights() const { return s_weights_; }
  // lambda_j^2 j^{2s}
  [[nodiscard]] std::span<const double> cov_s_weights() const { return cov_s_weights_; }

  // Raw-coefficient kernels used by the samplers' inner loops.

  [[nodiscard]] double psi_raw(std::span<const double> x) const {
    if (psi_vanishes()) return 0.0;
    const double n2 = detail::weighted_sq(s_weights_, x);
    if (kind_ == PsiKind::kQuadraticSobolev) return 0.5 * a_ * n2;
    return a_ * n2 / (std::sqrt(1.0 + n2) + 1.0);
  }

  // Multiplier m such that grad Psi(x)_j = m * j^{2s} x_j.
  [[nodiscard]] double grad_scale_raw(std::span<const double> x) const {
    if (psi_vanishes()) return 0.0;
    if (kind_ == PsiKind::kQuadraticSobolev) return a_;
    return a_ / std::sqrt(1.0 + detail::weighted_sq(s_weights_, x));
  }

  // out_j = mu^N(x)_j = -(x_j + lambda_j^2 grad Psi(x)_j)
  void drift_raw(std::span<const double> x, std::span<double> out) const {
    const double m = grad_scale_raw(x);
    if (m == 0.0) {
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
      return;
    }
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -(x[i] + m * cov_s_weights_[i] * x[i]);
  }

  void require_dim(std::size_t n, const char* what) const { spec_.require_dim(n, what); }

 private:
  CovarianceSpectrum spec_;
  SobolevIndex s_;
  PsiKind kind_;
  double a_;
  std::vector<double> s_weights_;
  std::vector<double> cov_s_weights_;
};

inline double psi(const TargetModel& model, const SpectralField& x) {
  model.require_dim(x.dim(), "psi");
  return model.psi_raw(x.coeffs());
}

inline DualField grad_psi(const TargetModel& model, const SpectralField& x) {
  model.require_dim(x.dim(), "grad_psi");
  auto g = DualField::zeros(x.dim());
  const double m = model.grad_scale_raw(x.coeffs());
  if (m == 0.0) return g;
  auto out = g.mutable_coeffs();
  const auto w = model.s_weights();
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = m * w[i] * x[i];
  return g;
}

/// <g, v> between H^{-s} and H^s: the plain coefficient dot product.
inline double dual_pairing(const DualField& g, const SpectralField& v) {
  if (g.dim() != v.dim()) throw ContractError("dual_pairing: dimension mismatch");
  CompensatedSum acc;
  for (std::size_t i = 0; i < v.dim(); ++i) acc.add(g[i] * v[i]);
  return acc.value();
}

inline double log_density_unnorm(const TargetModel& model, const SpectralField& x) {
  return -0.5 * cameron_martin_norm_sq(x, model.spectrum()) - psi(model, x);
}

inline SpectralField drift_mu(const TargetModel& model, const SpectralField& x) {
  model.require_dim(x.dim(), "drift_mu");
  auto out = SpectralField::zeros(x.dim());
  model.drift_raw(x.coeffs(), out.mutable_coeffs());
  return out;
}

/// Exact draw from pi^N for the Gaussian kinds: independent coordinates with
/// precision lambda_j^{-2} + a j^{2s}.
template <RandomSource Rng>
SpectralField sample_target_exact(const TargetModel& model, std::size_t n, Rng& rng) {
  if (!model.gaussian()) {
    throw UnsupportedTargetError(
        "sample_target_exact: no exact sampler for smooth-nonlinear targets; use burn-in");
  }
  if (model.psi_vanishes()) return sample_reference(n, model.spectrum(), rng);
  if (n < 1) throw ContractError("sample_target_exact: N must be >= 1");
  model.require_dim(n, "sample_target_exact");
  auto out = SpectralField::zeros(n);
  auto o = out.mutable_coeffs();
  const auto inv_lam_sq = model.spectrum().inv_lambda_sq();
  const auto w = model.s_weights();
  for (std::size_t i = 0; i < n; ++i) {
    o[i] = rng.normal() / std::sqrt(inv_lam_sq[i] + model.weight() * w[i]);
  }
  return out;
}

}  // namespace mala
