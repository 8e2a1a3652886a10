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
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "mala/errors.hpp"
#include "mala/path_sample.hpp"
#include "mala/proposal_kernels.hpp"
#include "mala/random.hpp"
#include "mala/spectral_space.hpp"
#include "mala/statistics.hpp"
#include "mala/target_measure.hpp"

namespace mala {

/// Standard normal CDF via erfc (accurate in both tails).
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// alpha(ell) = E[1 ^ e^Z], Z ~ N(-ell^3/4, ell^3/2). Because the mean is
/// minus half the variance, the expectation has the closed form
/// 2 Phi(-sqrt(ell^3 / 8)).
inline double limiting_alpha(double ell) {
  if (!(ell > 0.0)) throw DomainError("limiting_alpha: ell must be > 0");
  return 2.0 * normal_cdf(-std::sqrt(ell * ell * ell / 8.0));
}

/// h(ell) = ell alpha(ell), the speed of the limiting diffusion.
inline double speed(double ell) { return ell * limiting_alpha(ell); }

// ---------------------------------------------------------------------------
// Gaussian approximation of Q^N.

struct QDecomposition {
  double z_term = 0.0;
  double i_term = 0.0;
  // Extended precision: a binary64 residual cannot always reproduce q_total
  // (cancellation, round-half-even ties).
  long double err_term = 0.0L;
  double q_total = 0.0;

  [[nodiscard]] double reconstruct() const {
    return static_cast<double>(static_cast<long double>(z_term) + i_term + err_term);
  }
};

inline bool is_critical_exponent(double gamma) { return std::abs(gamma - 1.0 / 3.0) <= 1e-12; }

/// Splits q_total = Q^N(x, xi) into the Gaussian leading term Z^N, the
/// O(N^{-1/6}) term i^N and the residual err^N. Only defined at gamma = 1/3.
inline QDecomposition decompose_q(const SpectralField& x, const SpectralField& xi, double q_total,
                                  const KernelParams& p, const CovarianceSpectrum& spec) {
  if (!is_critical_exponent(p.gamma())) {
    throw DecompositionUndefinedError("decompose_q: only defined for gamma = 1/3");
  }
  if (x.dim() != p.n() || xi.dim() != p.n()) throw ContractError("decompose_q: dimension mismatch");
  spec.require_dim(p.n(), "decompose_q");
  const double ell = p.ell();
  const auto inv_lam_sq = spec.inv_lambda_sq();
  CompensatedSum cross;
  CompensatedSum xn;
  CompensatedSum xin;
  for (std::size_t i = 0; i < p.n(); ++i) {
    cross.add(std::sqrt(inv_lam_sq[i]) * xi[i] * x[i]);
    xn.add(inv_lam_sq[i] * x[i] * x[i]);
    xin.add(xi[i] * xi[i]);
  }
  QDecomposition d;
  d.q_total = q_total;
  d.z_term = -ell * ell * ell / 4.0 - std::pow(ell, 1.5) / std::numbers::sqrt2 /
                                          std::sqrt(static_cast<double>(p.n())) * cross.value();
  const double step = ell * p.dt();
  d.i_term = 0.5 * step * step * (xn.value() - xin.value());
  // Residual definition; nudge by ulps so the reconstruction is bit-exact.
  d.err_term = q_total - (static_cast<long double>(d.z_term) + d.i_term);
  for (int k = 0; k < 64 && d.reconstruct() != q_total; ++k) {
    d.err_term = std::nextafter(d.err_term, d.reconstruct() < q_total ? HUGE_VALL : -HUGE_VALL);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Speed function and its maximiser.

struct SpeedCurve {
  std::vector<double> ells;
  std::vector<double> alphas;
  std::vector<double> speeds;
  double ell_star = 0.0;
  double alpha_star = 0.0;
  double speed_star = 0.0;
};

/// Golden-section search for the maximum of a unimodal f on [lo, hi].
template <typename F>
double golden_section_max(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Tabulates alpha and h on the grid, then refines the grid argmax of h by
/// golden-section search between its neighbours to 1e-6.
inline SpeedCurve speed_and_optimum(std::span<const double> ell_grid) {
  if (ell_grid.empty()) throw ContractError("speed_and_optimum: empty grid");
  for (std::size_t i = 0; i < ell_grid.size(); ++i) {
    if (!(ell_grid[i] > 0.0)) throw ContractError("speed_and_optimum: grid must be positive");
    if (i > 0 && !(ell_grid[i] > ell_grid[i - 1])) {
      throw ContractError("speed_and_optimum: grid must be strictly increasing");
    }
  }
  SpeedCurve c;
  c.ells.assign(ell_grid.begin(), ell_grid.end());
  for (double ell : c.ells) {
    c.alphas.push_back(limiting_alpha(ell));
    c.speeds.push_back(ell * c.alphas.back());
  }
  const auto best = static_cast<std::size_t>(
      std::distance(c.speeds.begin(), std::max_element(c.speeds.begin(), c.speeds.end())));
  double ell_star = c.ells[best];
  if (c.ells.size() > 1) {
    const double lo = c.ells[best == 0 ? 0 : best - 1];
    const double hi = c.ells[std::min(best + 1, c.ells.size() - 1)];
    const double refined = golden_section_max([](double l) { return speed(l); }, lo, hi, 1e-6);
    if (speed(refined) >= c.speeds[best]) ell_star = refined;
  }
  c.ell_star = ell_star;
  c.alpha_star = limiting_alpha(ell_star);
  c.speed_star = ell_star * c.alpha_star;
  return c;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t points) {
  if (points < 2) return {lo};
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Expected squared jumping distance.

/// Mean of ||x^{k+1} - x^k||_r^2 over the trace. Uses stored full states
/// when present, otherwise the online accumulator for r.
inline double esjd(const ChainTrace& trace, SobolevIndex r) {
  for (const auto& j : trace.jumps) {
    if (j.r == r.r) return j.sum / static_cast<double>(trace.n_steps);
  }
  if (trace.policy.keeps_full_states(trace.n) && trace.states.size() == trace.n_steps + 1) {
    const auto w = sobolev_weights(r, trace.n);
    CompensatedSum total;
    for (std::size_t k = 0; k < trace.n_steps; ++k) {
      const auto a = trace.states[k].coeffs();
      const auto b = trace.states[k + 1].coeffs();
      CompensatedSum step;
      for (std::size_t i = 0; i < a.size(); ++i) step.add(w[i] * (b[i] - a[i]) * (b[i] - a[i]));
      total.add(step.value());
    }
    return total.value() / static_cast<double>(trace.n_steps);
  }
  throw RecordingPolicyError("esjd: trace has neither full states nor a jump accumulator for r");
}

// ---------------------------------------------------------------------------
// Drift / martingale decomposition.

struct DriftEstimate {
  SpectralField drift;      // d^N(x)
  SpectralField std_error;  // per-coordinate Monte Carlo standard error
  double acceptance = 0.0;  // fraction of accepted one-step moves
};

/// d^N(x) = (h(ell) dt)^{-1} E[x^1 - x^0 | x^0 = x] by Monte Carlo over
/// n_samples independent one-step transitions.
template <RandomSource Rng>
DriftEstimate empirical_drift(const SpectralField& x, const TargetModel& model,
                              const KernelParams& p, std::size_t n_samples, Rng& rng) {
  if (n_samples < 1) throw ContractError("empirical_drift: n_samples must be >= 1");
  const ChainKernel base(model, p, x);
  const std::size_t n = p.n();
  std::vector<double> sum(n, 0.0);
  std::vector<double> sum_sq(n, 0.0);
  std::size_t accepted = 0;
  ChainKernel k = base;
  for (std::size_t m = 0; m < n_samples; ++m) {
    const auto s = k.step(rng);
    if (!s.accepted) continue;
    ++accepted;
    const auto& now = k.state();
    for (std::size_t i = 0; i < n; ++i) {
      const double d = now[i] - x[i];
      sum[i] += d;
      sum_sq[i] += d * d;
    }
    k = base;  // a rejected step leaves the kernel at x already
  }
  const double scale = 1.0 / (speed(p.ell()) * p.dt());
  const double count = static_cast<double>(n_samples);
  std::vector<double> mean(n);
  std::vector<double> se(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m1 = sum[i] / count;
    mean[i] = scale * m1;
    const double var = n_samples > 1 ? (sum_sq[i] - count * m1 * m1) / (count - 1.0) : 0.0;
    se[i] = scale * std::sqrt(std::max(0.0, var) / count);
  }
  return {SpectralField(std::move(mean)), SpectralField(std::move(se)),
          static_cast<double>(accepted) / count};
}

namespace detail {

inline void require_full_states(const ChainTrace& trace, const char* what) {
  if (!trace.policy.keeps_full_states(trace.n) || trace.states.size() != trace.n_steps + 1) {
    throw RecordingPolicyError(std::string(what) + ": needs a full-state trace");
  }
}

}  // namespace detail

/// Rescaled noise path W^N at the knots t_k = k dt: W(0) = 0 and
/// W(t_{k+1}) = W(t_k) + sqrt(dt) Gamma^k with
/// Gamma^k = (2 h dt)^{-1/2} (x^{k+1} - x^k - h dt d^N(x^k)).
/// d_estimates[k] is the drift used at visited state k.
inline PathSample martingale_path(const ChainTrace& trace, std::span<const SpectralField> d_estimates,
                                  const KernelParams& p) {
  detail::require_full_states(trace, "martingale_path");
  if (d_estimates.size() < trace.n_steps) {
    throw ContractError("martingale_path: need one drift estimate per visited state");
  }
  const double dt = p.dt();
  const double h = speed(p.ell());
  const double gamma_scale = 1.0 / std::sqrt(2.0 * h * dt);
  const double sqrt_dt = std::sqrt(dt);
  const std::size_t n = trace.n;
  PathSample path;
  path.kind = PathKind::kRescaledNoise;
  path.times.reserve(trace.n_steps + 1);
  path.values.reserve(trace.n_steps + 1);
  std::vector<double> w(n, 0.0);
  path.times.push_back(0.0);
  path.values.emplace_back(w);
  for (std::size_t k = 0; k < trace.n_steps; ++k) {
    const auto a = trace.states[k].coeffs();
    const auto b = trace.states[k + 1].coeffs();
    const auto d = d_estimates[k].coeffs();
    if (d.size() != n) throw ContractError("martingale_path: drift estimate dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      w[i] += sqrt_dt * gamma_scale * (b[i] - a[i] - h * dt * d[i]);
    }
    path.times.push_back(static_cast<double>(k + 1) * dt);
    path.values.emplace_back(w);
  }
  return path;
}

/// martingale_path with d^N replaced by the limiting drift mu(x^k); the
/// result is flagged approximate.
inline PathSample martingale_path_limit_drift(const ChainTrace& trace, const TargetModel& model,
                                              const KernelParams& p) {
  detail::require_full_states(trace, "martingale_path");
  std::vector<SpectralField> d;
  d.reserve(trace.n_steps);
  for (std::size_t k = 0; k < trace.n_steps; ++k) d.push_back(drift_mu(model, trace.states[k]));
  auto path = martingale_path(trace, d, p);
  path.approximate = true;
  return path;
}

/// martingale_path with d^N re-estimated at every visited state by nested
/// Monte Carlo (n_nested one-step samples each). Meant for short traces.
template <RandomSource Rng>
PathSample martingale_path_exact_drift(const ChainTrace& trace, const TargetModel& model,
                                       const KernelParams& p, std::size_t n_nested, Rng& rng) {
  detail::require_full_states(trace, "martingale_path");
  std::vector<SpectralField> d;
  d.reserve(trace.n_steps);
  for (std::size_t k = 0; k < trace.n_steps; ++k) {
    d.push_back(empirical_drift(trace.states[k], model, p, n_nested, rng).drift);
  }
  return martingale_path(trace, d, p);
}

enum class DriftMode {
  kEstimated,  // d^N(x) from the same one-step samples (sample mean)
  kLimit,      // d^N(x) replaced by mu^N(x)
};

struct MartingaleTrace {
  double estimate = 0.0;   // Monte Carlo E_x ||Gamma^{0,N}||_s^2 = tr_{H^s} D^N(x)
  double std_error = 0.0;
  double reference = 0.0;  // tr_{H^s}(C_s) truncated at N
  [[nodiscard]] double relative_error() const { return std::abs(estimate - reference) / reference; }
};

/// Monte Carlo estimate of tr_{H^s}(D^N(x)) with s the model's Sobolev index.
template <RandomSource Rng>
MartingaleTrace martingale_cov_trace(const SpectralField& x, const TargetModel& model,
                                     const KernelParams& p, std::size_t n_samples, Rng& rng,
                                     DriftMode mode = DriftMode::kEstimated) {
  if (n_samples < 1) throw ContractError("martingale_cov_trace: n_samples must be >= 1");
  if (mode == DriftMode::kEstimated && n_samples < 2) {
    throw ContractError("martingale_cov_trace: estimated drift needs n_samples >= 2");
  }
  const std::size_t n = p.n();
  const double dt = p.dt();
  const double h = speed(p.ell());
  const double norm = 1.0 / (2.0 * h * dt);
  const auto w = model.s_weights();
  const auto mu = drift_mu(model, x);
  std::vector<double> shift(n);
  for (std::size_t i = 0; i < n; ++i) shift[i] = h * dt * mu[i];

  // Welford per coordinate for the estimated mode; per-sample squared norms
  // about the limit drift for the limit mode and for the error bar.
  std::vector<double> mean(n, 0.0);
  std::vector<double> m2(n, 0.0);
  std::vector<double> sample_norms;
  sample_norms.reserve(n_samples);
  const ChainKernel base(model, p, x);
  ChainKernel k = base;
  for (std::size_t m = 0; m < n_samples; ++m) {
    const bool moved = k.step(rng).accepted;
    const auto& now = k.state();
    CompensatedSum about_limit;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = now[i] - x[i];
      const double e = d - shift[i];
      about_limit.add(w[i] * e * e);
      const double delta = d - mean[i];
      mean[i] += delta / static_cast<double>(m + 1);
      m2[i] += delta * (d - mean[i]);
    }
    sample_norms.push_back(norm * about_limit.value());
    if (moved) k = base;  // a rejected step leaves the kernel at x already
  }
  MartingaleTrace out;
  out.reference = trace_sobolev(model.spectrum(), model.s(), n);
  if (mode == DriftMode::kLimit) {
    out.estimate = stats::mean(std::span<const double>(sample_norms));
  } else {
    CompensatedSum tr;
    for (std::size_t i = 0; i < n; ++i) tr.add(w[i] * m2[i] / static_cast<double>(n_samples - 1));
    out.estimate = norm * tr.value();
  }
  out.std_error = n_samples > 1 ? stats::standard_error(std::span<const double>(sample_norms)) : 0.0;
  return out;
}

}  // namespace mala
