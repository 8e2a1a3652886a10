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
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mala/errors.hpp"
#include "mala/random.hpp"
#include "mala/spectral_space.hpp"
#include "mala/target_measure.hpp"

namespace mala {

enum class ProposalKind { kMala, kRwm };

inline std::string_view to_string(ProposalKind k) {
  return k == ProposalKind::kMala ? "mala" : "rwm";
}

// kForce* bypass the Metropolis decision while still consuming the uniform
// draw, so streams stay aligned with ordinary runs.
enum class AcceptRule { kMetropolis, kForceAccept, kForceReject };

/// Step-size parameters for a chain of dimension N. The interpolation step is
/// dt = N^{-gamma} and the proposal time-step is delta = ell * dt.
class KernelParams {
 public:
  KernelParams(std::size_t n, double gamma, double ell, ProposalKind kind = ProposalKind::kMala,
               AcceptRule rule = AcceptRule::kMetropolis)
      : n_(n), gamma_(gamma), ell_(ell), kind_(kind), rule_(rule) {
    if (n < 1) throw ContractError("KernelParams: N must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractError("KernelParams: gamma must lie in (0, 1]");
    if (!(ell > 0.0) || !std::isfinite(ell)) throw ContractError("KernelParams: ell must be > 0");
    dt_ = std::pow(static_cast<double>(n), -gamma);
    delta_ = ell * dt_;
  }

  [[nodiscard]] std::size_t n() const { return n_; }
  [[nodiscard]] double gamma() const { return gamma_; }
  [[nodiscard]] double ell() const { return ell_; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] double delta() const { return delta_; }
  [[nodiscard]] ProposalKind kind() const { return kind_; }
  [[nodiscard]] AcceptRule rule() const { return rule_; }

  [[nodiscard]] KernelParams with_rule(AcceptRule rule) const {
    return KernelParams(n_, gamma_, ell_, kind_, rule);
  }

 private:
  std::size_t n_;
  double gamma_;
  double ell_;
  ProposalKind kind_;
  AcceptRule rule_;
  double dt_ = 0.0;
  double delta_ = 0.0;
};

struct Proposal {
  SpectralField y;
  SpectralField xi;
};

struct StepOutcome {
  SpectralField state;
  SpectralField proposal;
  SpectralField noise;
  double q_value = 0.0;
  bool accepted = false;
};

/// min(1, e^Q) evaluated as exp(min(0, Q)); never overflows, NaN maps to 0.
inline double acceptance_probability(double q) {
  if (std::isnan(q)) return 0.0;
  return std::exp(std::min(0.0, q));
}

namespace detail {

inline void require_chain_dim(const SpectralField& x, const KernelParams& p, const char* what) {
  if (x.dim() != p.n()) throw ContractError(std::string(what) + ": state dimension != N");
}

// Per-coordinate log-ratio sum shared by the generic and the cached paths.
// mu_x / mu_y are the drifts at x and y (unused for RWM).
inline double q_terms(std::span<const double> w, std::span<const double> x,
                      std::span<const double> y, std::span<const double> mu_x,
                      std::span<const double> mu_y, double delta, ProposalKind kind) {
  if (kind == ProposalKind::kRwm) {
    return blocked_sum(x.size(), [&](std::size_t i) {
      return -0.5 * w[i] * (y[i] - x[i]) * (y[i] + x[i]);
    });
  }
  const double inv4d = 1.0 / (4.0 * delta);
  return blocked_sum(x.size(), [&](std::size_t i) {
    const double d = y[i] - x[i];
    const double back = d + delta * mu_y[i];  // -(x - y - delta mu(y))
    const double fwd = d - delta * mu_x[i];   // y - x - delta mu(x)
    const double density = -0.5 * d * (y[i] + x[i]);
    const double transition = -inv4d * (back - fwd) * (back + fwd);
    return w[i] * (density + transition);
  });
}

}  // namespace detail

/// MALA proposal y = x + delta mu^N(x) + sqrt(2 delta) C^{1/2} xi.
template <RandomSource Rng>
Proposal mala_propose(const SpectralField& x, const TargetModel& model, const KernelParams& p,
                      Rng& rng) {
  detail::require_chain_dim(x, p, "mala_propose");
  model.require_dim(p.n(), "mala_propose");
  auto xi = SpectralField::zeros(p.n());
  auto xs = xi.mutable_coeffs();
  for (auto& v : xs) v = rng.normal();
  auto y = drift_mu(model, x);
  auto ys = y.mutable_coeffs();
  const auto lam = model.spectrum().lambdas();
  const double noise = std::sqrt(2.0 * p.delta());
  for (std::size_t i = 0; i < p.n(); ++i) ys[i] = x[i] + p.delta() * ys[i] + noise * lam[i] * xs[i];
  return {std::move(y), std::move(xi)};
}

/// Preconditioned random-walk proposal y = x + sqrt(2 delta) C^{1/2} xi.
template <RandomSource Rng>
Proposal rwm_propose(const SpectralField& x, const KernelParams& p, const CovarianceSpectrum& spec,
                     Rng& rng) {
  detail::require_chain_dim(x, p, "rwm_propose");
  spec.require_dim(p.n(), "rwm_propose");
  auto xi = SpectralField::zeros(p.n());
  auto xs = xi.mutable_coeffs();
  for (auto& v : xs) v = rng.normal();
  auto y = SpectralField::zeros(p.n());
  auto ys = y.mutable_coeffs();
  const auto lam = spec.lambdas();
  const double noise = std::sqrt(2.0 * p.delta());
  for (std::size_t i = 0; i < p.n(); ++i) ys[i] = x[i] + noise * lam[i] * xs[i];
  return {std::move(y), std::move(xi)};
}

/// Log Metropolis-Hastings ratio Q^N(x, y) of the MALA transition, computed
/// from the two states only.
inline double log_accept_ratio(const SpectralField& x, const SpectralField& y,
                               const TargetModel& model, const KernelParams& p) {
  detail::require_chain_dim(x, p, "log_accept_ratio");
  detail::require_chain_dim(y, p, "log_accept_ratio");
  model.require_dim(p.n(), "log_accept_ratio");
  const auto mu_x = drift_mu(model, x);
  const auto mu_y = drift_mu(model, y);
  const double terms = detail::q_terms(model.spectrum().inv_lambda_sq(), x.coeffs(), y.coeffs(),
                                       mu_x.coeffs(), mu_y.coeffs(), p.delta(), ProposalKind::kMala);
  return terms - (psi(model, y) - psi(model, x));
}

/// Symmetric-proposal ratio log pi^N(y) - log pi^N(x).
inline double rwm_log_accept_ratio(const SpectralField& x, const SpectralField& y,
                                   const TargetModel& model) {
  if (x.dim() != y.dim()) throw ContractError("rwm_log_accept_ratio: dimension mismatch");
  model.require_dim(x.dim(), "rwm_log_accept_ratio");
  const double terms = detail::q_terms(model.spectrum().inv_lambda_sq(), x.coeffs(), y.coeffs(), {},
                                       {}, 1.0, ProposalKind::kRwm);
  return terms - (psi(model, y) - psi(model, x));
}

/// Stateful single-chain transition with cached drift and Psi at the current
/// state, so each step evaluates the target only at the proposal. Draw order
/// per step: N normals (coordinate order), then one uniform.
class ChainKernel {
 public:
  ChainKernel(const TargetModel& model, const KernelParams& params, const SpectralField& x0)
      : model_(&model), params_(params), x_(x0.vector()) {
    detail::require_chain_dim(x0, params, "ChainKernel");
    model.require_dim(params.n(), "ChainKernel");
    const std::size_t n = params.n();
    y_.resize(n);
    xi_.resize(n);
    mu_x_.resize(n);
    mu_y_.resize(n);
    noise_scale_.resize(n);
    const double noise = std::sqrt(2.0 * params.delta());
    const auto lam = model.spectrum().lambdas();
    for (std::size_t i = 0; i < n; ++i) noise_scale_[i] = noise * lam[i];
    if (params.kind() == ProposalKind::kMala) model.drift_raw(x_, mu_x_);
    psi_x_ = model.psi_raw(x_);
  }

  struct Step {
    double q = 0.0;
    double uniform = 0.0;
    bool accepted = false;
  };

  template <RandomSource Rng>
  Step step(Rng& rng) {
    const std::size_t n = params_.n();
    const double delta = params_.delta();
    const bool mala = params_.kind() == ProposalKind::kMala;
    for (std::size_t i = 0; i < n; ++i) xi_[i] = rng.normal();
    if (mala) {
      for (std::size_t i = 0; i < n; ++i) y_[i] = x_[i] + delta * mu_x_[i] + noise_scale_[i] * xi_[i];
      model_->drift_raw(y_, mu_y_);
    } else {
      for (std::size_t i = 0; i < n; ++i) y_[i] = x_[i] + noise_scale_[i] * xi_[i];
    }
    const double psi_y = model_->psi_raw(y_);
    Step s;
    s.q = detail::q_terms(model_->spectrum().inv_lambda_sq(), x_, y_, mu_x_, mu_y_, delta,
                          params_.kind()) -
          (psi_y - psi_x_);
    s.uniform = rng.uniform();
    switch (params_.rule()) {
      case AcceptRule::kMetropolis: s.accepted = s.uniform < acceptance_probability(s.q); break;
      case AcceptRule::kForceAccept: s.accepted = true; break;
      case AcceptRule::kForceReject: s.accepted = false; break;
    }
    last_accepted_ = s.accepted;
    if (s.accepted) {
      // Keep the pre-move state in y_ so callers can still form the jump.
      std::swap(x_, y_);
      std::swap(mu_x_, mu_y_);
      psi_x_ = psi_y;
    }
    return s;
  }

  [[nodiscard]] std::span<const double> state() const { return x_; }
  // The proposal of the last step (after an accepted step this is the old
  // state's slot swapped back, see previous_state()).
  [[nodiscard]] std::span<const double> proposal() const { return last_accepted_ ? x_ : y_; }
  [[nodiscard]] std::span<const double> previous_state() const { return last_accepted_ ? y_ : x_; }
  [[nodiscard]] std::span<const double> noise() const { return xi_; }
  [[nodiscard]] bool last_accepted() const { return last_accepted_; }
  [[nodiscard]] const KernelParams& params() const { return params_; }

 private:
  const TargetModel* model_;
  KernelParams params_;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> xi_;
  std::vector<double> mu_x_;
  std::vector<double> mu_y_;
  std::vector<double> noise_scale_;
  double psi_x_ = 0.0;
  bool last_accepted_ = false;
};

/// One Metropolis-Hastings transition from x.
template <RandomSource Rng>
StepOutcome mh_step(const SpectralField& x, const TargetModel& model, const KernelParams& p,
                    Rng& rng) {
  ChainKernel kernel(model, p, x);
  const auto s = kernel.step(rng);
  StepOutcome out;
  out.state = SpectralField(std::vector<double>(kernel.state().begin(), kernel.state().end()));
  out.proposal =
      SpectralField(std::vector<double>(kernel.proposal().begin(), kernel.proposal().end()));
  out.noise = SpectralField(std::vector<double>(kernel.noise().begin(), kernel.noise().end()));
  out.q_value = s.q;
  out.accepted = s.accepted;
  return out;
}

/// What run_chain keeps besides the acceptance counters.
struct RecordingPolicy {
  // Keep every stride-th state (0: none); states[i] is x^{i*stride}.
  std::size_t state_stride = 1;
  // Number of leading coordinates stored per state (0: all).
  std::size_t state_coords = 0;
  // Per-step accepted flags and Q values.
  bool per_step = true;
  // Sobolev exponents r for which per-step squared jumps ||x^{k+1} - x^k||_r^2
  // are accumulated online.
  std::vector<double> jump_indices{0.0};

  static RecordingPolicy full() { return {}; }
  static RecordingPolicy summary() { return {0, 0, true, {0.0}}; }
  static RecordingPolicy thinned(std::size_t stride, std::size_t coords) {
    return {stride, coords, true, {0.0}};
  }
  // Full traces for small chains, summaries plus a thinned coordinate-1 trace
  // above N = 1024.
  static RecordingPolicy default_for(std::size_t n) {
    return n > 1024 ? thinned(10, 1) : full();
  }

  [[nodiscard]] bool keeps_full_states(std::size_t n) const {
    return state_stride == 1 && (state_coords == 0 || state_coords >= n);
  }
};

struct JumpAccumulator {
  double r = 0.0;
  double sum = 0.0;
};

struct ChainTrace {
  std::size_t n = 0;
  double gamma = 0.0;
  double ell = 0.0;
  ProposalKind kind = ProposalKind::kMala;
  std::size_t n_steps = 0;
  RecordingPolicy policy;

  std::size_t accepted_count = 0;
  double acceptance_probability_sum = 0.0;
  double q_sum = 0.0;
  std::vector<std::uint8_t> accepted;
  std::vector<double> q_values;
  std::vector<SpectralField> states;
  std::vector<JumpAccumulator> jumps;
  SpectralField final_state;

  [[nodiscard]] double acceptance_rate() const {
    return n_steps == 0 ? 0.0 : static_cast<double>(accepted_count) / static_cast<double>(n_steps);
  }
  // Rao-Blackwellised acceptance: mean of min(1, e^Q).
  [[nodiscard]] double mean_acceptance_probability() const {
    return n_steps == 0 ? 0.0 : acceptance_probability_sum / static_cast<double>(n_steps);
  }
  [[nodiscard]] double mean_q() const {
    return n_steps == 0 ? 0.0 : q_sum / static_cast<double>(n_steps);
  }
  [[nodiscard]] double time_step() const { return std::pow(static_cast<double>(n), -gamma); }
};

/// Iterate mh_step n_steps times from x0.
template <RandomSource Rng>
ChainTrace run_chain(const SpectralField& x0, const TargetModel& model, const KernelParams& p,
                     std::size_t n_steps, Rng& rng, const RecordingPolicy& policy = {}) {
  if (n_steps < 1) throw ContractError("run_chain: n_steps must be >= 1");
  ChainKernel kernel(model, p, x0);
  ChainTrace trace;
  trace.n = p.n();
  trace.gamma = p.gamma();
  trace.ell = p.ell();
  trace.kind = p.kind();
  trace.n_steps = n_steps;
  trace.policy = policy;

  const std::size_t coords =
      policy.state_coords == 0 ? p.n() : std::min(policy.state_coords, p.n());
  auto record_state = [&](std::span<const double> s) {
    trace.states.emplace_back(std::vector<double>(s.begin(), s.begin() + coords));
  };
  if (policy.state_stride > 0) {
    trace.states.reserve(n_steps / policy.state_stride + 1);
    record_state(kernel.state());
  }
  if (policy.per_step) {
    trace.accepted.reserve(n_steps);
    trace.q_values.reserve(n_steps);
  }
  std::vector<std::vector<double>> jump_weights;
  for (double r : policy.jump_indices) {
    trace.jumps.push_back({r, 0.0});
    jump_weights.push_back(sobolev_weights(SobolevIndex{r}, p.n()));
  }
  CompensatedSum acc_prob;
  CompensatedSum q_sum;

  for (std::size_t k = 0; k < n_steps; ++k) {
    const auto s = kernel.step(rng);
    acc_prob.add(acceptance_probability(s.q));
    q_sum.add(s.q);
    if (s.accepted) {
      ++trace.accepted_count;
      const auto now = kernel.state();
      const auto before = kernel.previous_state();
      for (std::size_t m = 0; m < jump_weights.size(); ++m) {
        const auto& w = jump_weights[m];
        trace.jumps[m].sum += detail::blocked_sum(now.size(), [&](std::size_t i) {
          const double d = now[i] - before[i];
          return w[i] * d * d;
        });
      }
    }
    if (policy.per_step) {
      trace.accepted.push_back(s.accepted ? 1 : 0);
      trace.q_values.push_back(s.q);
    }
    if (policy.state_stride > 0 && (k + 1) % policy.state_stride == 0) record_state(kernel.state());
  }
  trace.acceptance_probability_sum = acc_prob.value();
  trace.q_sum = q_sum.value();
  trace.final_state = SpectralField(std::vector<double>(kernel.state().begin(), kernel.state().end()));
  return trace;
}

struct StationaryStart {
  SpectralField state;
  bool exact = true;  // false: approximately stationary after burn-in
  std::size_t burn_in_steps = 0;
};

/// Default burn-in for targets without an exact sampler: 50 N^{1/3} steps.
inline std::size_t default_burn_in(std::size_t n) {
  // The slack keeps perfect cubes from rounding up past 50 k.
  return static_cast<std::size_t>(std::ceil(50.0 * std::cbrt(static_cast<double>(n)) - 1e-9));
}

/// Initial state distributed (exactly or approximately) as pi^N. Gaussian
/// kinds are sampled exactly; otherwise a reference draw is pushed through
/// burn_in MALA steps with params p.
template <RandomSource Rng>
StationaryStart stationary_start(const TargetModel& model, const KernelParams& p, Rng& rng,
                                 std::optional<std::size_t> burn_in = std::nullopt) {
  if (model.gaussian()) return {sample_target_exact(model, p.n(), rng), true, 0};
  const std::size_t steps = burn_in.value_or(default_burn_in(p.n()));
  auto x = sample_reference(p.n(), model.spectrum(), rng);
  if (steps == 0) return {std::move(x), false, 0};
  ChainKernel kernel(model, p, x);
  for (std::size_t k = 0; k < steps; ++k) kernel.step(rng);
  return {SpectralField(std::vector<double>(kernel.state().begin(), kernel.state().end())), false,
          steps};
}

}  // namespace mala
