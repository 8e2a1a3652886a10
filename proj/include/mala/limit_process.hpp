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
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "mala/chain_diagnostics.hpp"
#include "mala/errors.hpp"
#include "mala/path_sample.hpp"
#include "mala/proposal_kernels.hpp"
#include "mala/random.hpp"
#include "mala/spectral_space.hpp"
#include "mala/statistics.hpp"
#include "mala/target_measure.hpp"

namespace mala {

/// Algorithmic time covered by a trace: one step advances time by N^{-gamma}.
inline double trace_duration(const ChainTrace& trace) {
  return static_cast<double>(trace.n_steps) * trace.time_step();
}

/// Uniform grid 0, step, 2 step, ... up to and including `end` (within
/// rounding).
inline std::vector<double> time_grid(double end, double step) {
  if (!(step > 0.0) || !(end >= 0.0)) throw ContractError("time_grid: need step > 0 and end >= 0");
  const auto count = static_cast<std::size_t>(std::floor(end / step * (1.0 + 1e-12))) + 1;
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) g[i] = static_cast<double>(i) * step;
  return g;
}

namespace detail {

inline void require_every_step(const ChainTrace& trace, const char* what) {
  if (trace.policy.state_stride != 1 || trace.states.size() != trace.n_steps + 1) {
    throw RecordingPolicyError(std::string(what) + ": needs every state recorded (stride 1)");
  }
}

// Cell index k and fraction in [0, 1] for time t on knots k dt.
inline std::pair<std::size_t, double> locate(double t, double dt, std::size_t n_steps) {
  const double end = static_cast<double>(n_steps) * dt;
  if (!(t >= 0.0) || t > end * (1.0 + 1e-12)) throw DomainError("interpolate_chain: time outside trace");
  double u = t / dt;
  // t = k dt computed in floating point may land an ulp off the knot.
  if (const double r = std::round(u); std::abs(u - r) <= 1e-9 * std::max(1.0, r)) u = r;
  auto k = static_cast<std::size_t>(std::floor(u));
  if (k >= n_steps) return {n_steps - 1, 1.0};
  return {k, std::min(1.0, u - static_cast<double>(k))};
}

}  // namespace detail

/// Piecewise-linear interpolant z^N(t) = (t/dt - k) x^{k+1} + (k + 1 - t/dt) x^k
/// with dt = N^{-gamma}. Exact at the knots t = k dt.
inline PathSample interpolate_chain(const ChainTrace& trace, const KernelParams& p,
                                    std::span<const double> t_grid) {
  detail::require_every_step(trace, "interpolate_chain");
  const double dt = p.dt();
  PathSample path;
  path.kind = PathKind::kInterpolatedChain;
  path.times.assign(t_grid.begin(), t_grid.end());
  path.values.reserve(t_grid.size());
  for (double t : t_grid) {
    const auto [k, frac] = detail::locate(t, dt, trace.n_steps);
    const auto a = trace.states[k].coeffs();
    const auto b = trace.states[k + 1].coeffs();
    std::vector<double> v(a.size());
    if (frac == 0.0) {
      v.assign(a.begin(), a.end());
    } else if (frac == 1.0) {
      v.assign(b.begin(), b.end());
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) v[i] = frac * b[i] + (1.0 - frac) * a[i];
    }
    path.values.emplace_back(std::move(v));
  }
  path.validate();
  return path;
}

/// Piecewise-constant interpolant z-bar^N(t) = x^{floor(t/dt)}.
inline PathSample interpolate_chain_constant(const ChainTrace& trace, const KernelParams& p,
                                             std::span<const double> t_grid) {
  detail::require_every_step(trace, "interpolate_chain_constant");
  PathSample path;
  path.kind = PathKind::kPiecewiseConstantChain;
  path.times.assign(t_grid.begin(), t_grid.end());
  for (double t : t_grid) {
    const auto [k, frac] = detail::locate(t, p.dt(), trace.n_steps);
    path.values.push_back(frac == 1.0 ? trace.states[k + 1] : trace.states[k]);
  }
  path.validate();
  return path;
}

struct SpdeRecording {
  std::size_t stride = 1;  // keep every stride-th integrator step
  std::size_t coords = 0;  // leading coordinates kept (0: all)
};

/// Euler-Maruyama integration of dz = h mu(z) dt + sqrt(2h) dW, W a
/// C-Brownian motion, in the same N-dimensional truncation as z0:
/// z_{m+1} = z_m + h mu(z_m) dt + sqrt(2 h dt) C^{1/2} xi_m.
template <RandomSource Rng>
PathSample euler_spde(const SpectralField& z0, const TargetModel& model, double h_speed, double T,
                      double dt_integrator, Rng& rng, SpdeRecording rec = {}) {
  if (!(dt_integrator > 0.0)) throw ContractError("euler_spde: dt must be > 0");
  if (!(h_speed > 0.0)) throw ContractError("euler_spde: speed must be > 0");
  if (!(T >= 0.0)) throw ContractError("euler_spde: horizon must be >= 0");
  if (rec.stride < 1) throw ContractError("euler_spde: stride must be >= 1");
  const std::size_t n = z0.dim();
  model.require_dim(n, "euler_spde");
  const auto steps = static_cast<std::size_t>(std::llround(T / dt_integrator));
  const std::size_t coords = rec.coords == 0 ? n : std::min(rec.coords, n);

  std::vector<double> z(z0.coeffs().begin(), z0.coeffs().end());
  std::vector<double> mu(n);
  std::vector<double> noise_scale(n);
  const auto lam = model.spectrum().lambdas();
  const double amp = std::sqrt(2.0 * h_speed * dt_integrator);
  for (std::size_t i = 0; i < n; ++i) noise_scale[i] = amp * lam[i];

  PathSample path;
  path.kind = PathKind::kEulerSpde;
  auto record = [&](std::size_t m) {
    path.times.push_back(static_cast<double>(m) * dt_integrator);
    path.values.emplace_back(std::vector<double>(z.begin(), z.begin() + coords));
  };
  record(0);
  for (std::size_t m = 0; m < steps; ++m) {
    model.drift_raw(z, mu);
    for (std::size_t i = 0; i < n; ++i) {
      z[i] += h_speed * mu[i] * dt_integrator + noise_scale[i] * rng.normal();
    }
    if ((m + 1) % rec.stride == 0) record(m + 1);
  }
  return path;
}

/// Exponential decay rate of the autocorrelation of coordinate `coord`
/// (1-based). Fits log ACF(tau) = c - rate tau by least squares over the
/// leading lags (from 0, at most max_lag) while the ACF stays above 0.2.
/// The path must be sampled on a uniform grid.
inline double acf_rate_fit(const PathSample& path, std::size_t coord, double max_lag) {
  if (coord < 1) throw ContractError("acf_rate_fit: coordinates are 1-based");
  if (path.times.size() < 3) throw FitFailureError("acf_rate_fit: path too short");
  const double spacing = path.times[1] - path.times[0];
  for (std::size_t i = 2; i < path.times.size(); ++i) {
    const double d = path.times[i] - path.times[i - 1];
    if (std::abs(d - spacing) > 1e-9 * std::max(1.0, spacing)) {
      throw ContractError("acf_rate_fit: path must be on a uniform time grid");
    }
  }
  const auto series = path.coordinate(coord - 1);
  const auto max_k = static_cast<std::size_t>(std::floor(max_lag / spacing));
  const auto acf = stats::autocorrelation(series, max_k);
  std::vector<double> lags;
  std::vector<double> logs;
  for (std::size_t k = 0; k < acf.size(); ++k) {
    if (!(acf[k] > 0.2)) break;
    lags.push_back(static_cast<double>(k) * spacing);
    logs.push_back(std::log(acf[k]));
  }
  if (lags.size() < 2) throw FitFailureError("acf_rate_fit: autocorrelation drops below 0.2 immediately");
  return -stats::least_squares(lags, logs).slope;
}

/// Writes a path as CSV: a header "time,x1,...,xK" then one row per time,
/// K being the number of coordinates recorded.
inline void write_path_csv(std::ostream& out, const PathSample& path) {
  path.validate();
  const std::size_t k = path.values.empty() ? 0 : path.values.front().dim();
  out << "time";
  for (std::size_t i = 1; i <= k; ++i) out << ",x" << i;
  out << '\n';
  char buf[32];
  const auto put = [&](double v) {
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, r.ptr - buf);
  };
  for (std::size_t t = 0; t < path.times.size(); ++t) {
    if (path.values[t].dim() != k) throw ContractError("write_path_csv: ragged path");
    put(path.times[t]);
    for (double v : path.values[t].coeffs()) {
      out << ',';
      put(v);
    }
    out << '\n';
  }
}

}  // namespace mala
