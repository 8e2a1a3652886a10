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

#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "mala/chain_diagnostics.hpp"
#include "mala/errors.hpp"
#include "mala/limit_process.hpp"
#include "mala/random.hpp"
#include "test_support.hpp"

namespace mala {
namespace {

using testing::ScriptedSource;

TargetModel zero_model(std::size_t n, double kappa = 1.0) {
  return TargetModel(CovarianceSpectrum(kappa, n), {0.0}, PsiKind::kZero);
}

// Exact OU path dz = -rate z dt + sqrt(2 rate) sigma dW sampled every dt.
PathSample exact_ou(double rate, double sigma, double T, double dt, RandomStream& rng) {
  PathSample p;
  p.kind = PathKind::kEulerSpde;
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  const double phi = std::exp(-rate * dt);
  const double sd = sigma * std::sqrt(1.0 - phi * phi);
  double z = sigma * rng.normal();
  for (std::size_t k = 0; k <= steps; ++k) {
    p.times.push_back(static_cast<double>(k) * dt);
    p.values.push_back(SpectralField({z}));
    z = phi * z + sd * rng.normal();
  }
  return p;
}

TEST(TimeBookkeeping, StepsCoverNTimesDt) {
  const std::size_t n = 729;
  const auto m = zero_model(n);
  const KernelParams p(n, 1.0 / 3.0, 1.0);
  RandomStream rng(1);
  const auto t = run_chain(sample_reference(n, m.spectrum(), rng), m, p, 90, rng, RecordingPolicy::summary());
  EXPECT_EQ(trace_duration(t), 90.0 * std::pow(729.0, -1.0 / 3.0));
  EXPECT_NEAR(trace_duration(t), 10.0, 1e-12);
}

TEST(TimeGrid, IncludesEndpoint) {
  const auto g = time_grid(1.0, 0.25);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_THROW(time_grid(1.0, 0.0), ContractError);
}

class InterpolationTest : public ::testing::Test {
 protected:
  void SetUp() override {
    RandomStream rng(2);
    trace_ = run_chain(sample_reference(kN, model_.spectrum(), rng), model_, params_, 50, rng, RecordingPolicy::full());
  }
  static constexpr std::size_t kN = 27;
  TargetModel model_ = zero_model(kN);
  KernelParams params_{kN, 1.0 / 3.0, 1.0};
  ChainTrace trace_;
};

TEST_F(InterpolationTest, ExactAtKnotsAndMidpoints) {
  const double dt = params_.dt();
  std::vector<double> knots, mids{0.0};
  for (std::size_t k = 0; k <= 50; ++k) knots.push_back(static_cast<double>(k) * dt);
  for (std::size_t k = 0; k < 50; ++k) mids.push_back((static_cast<double>(k) + 0.5) * dt);
  const auto at_knots = interpolate_chain(trace_, params_, knots);
  for (std::size_t k = 0; k <= 50; ++k) EXPECT_EQ(at_knots.values[k], trace_.states[k]) << k;
  const auto at_mids = interpolate_chain(trace_, params_, mids);
  for (std::size_t k = 0; k < 50; ++k) {
    for (std::size_t i = 0; i < kN; ++i) {
      EXPECT_NEAR(at_mids.values[k + 1][i], 0.5 * (trace_.states[k][i] + trace_.states[k + 1][i]), 1e-13);
    }
  }
}

TEST_F(InterpolationTest, LinearWithinCells) {
  const double dt = params_.dt();
  for (std::size_t k : {0u, 7u, 49u}) {
    std::vector<double> ts{0.0};
    for (int q = 1; q <= 3; ++q) ts.push_back((static_cast<double>(k) + 0.25 * q) * dt);
    const auto path = interpolate_chain(trace_, params_, ts);
    for (std::size_t i = 0; i < kN; ++i) {
      const double second_diff = path.values[1][i] - 2.0 * path.values[2][i] + path.values[3][i];
      EXPECT_NEAR(second_diff, 0.0, 1e-14);
    }
  }
}

TEST_F(InterpolationTest, PiecewiseConstantWithinJumpBound) {
  const double dt = params_.dt();
  std::vector<double> ts;
  for (double t = 0.0; t < 50.0 * dt; t += 0.37 * dt) ts.push_back(t);
  const auto lin = interpolate_chain(trace_, params_, ts);
  const auto con = interpolate_chain_constant(trace_, params_, ts);
  for (std::size_t q = 0; q < ts.size(); ++q) {
    const auto k = static_cast<std::size_t>(std::floor(ts[q] / dt));
    std::vector<double> diff(kN), jump(kN);
    for (std::size_t i = 0; i < kN; ++i) {
      diff[i] = lin.values[q][i] - con.values[q][i];
      jump[i] = trace_.states[k + 1][i] - trace_.states[k][i];
    }
    EXPECT_LE(sobolev_norm_sq(SpectralField(diff), {0.3}), sobolev_norm_sq(SpectralField(jump), {0.3}) + 1e-15);
    EXPECT_EQ(con.values[q], trace_.states[k]);
  }
}

TEST_F(InterpolationTest, RejectsOutOfRangeTimesAndThinnedTraces) {
  const double end = 50.0 * params_.dt();
  EXPECT_NO_THROW(interpolate_chain(trace_, params_, std::vector<double>{0.0, end}));
  EXPECT_THROW(interpolate_chain(trace_, params_, std::vector<double>{0.0, end * 1.01}), DomainError);
  EXPECT_THROW(interpolate_chain(trace_, params_, std::vector<double>{-0.1}), DomainError);
  RandomStream rng(3);
  const auto thin = run_chain(SpectralField::zeros(kN), model_, params_, 10, rng, RecordingPolicy::thinned(2, 0));
  EXPECT_THROW(interpolate_chain(thin, params_, std::vector<double>{0.0}), RecordingPolicyError);
}

TEST(EulerSpde, NoiseFreeDecay) {
  const std::size_t n = 4;
  const auto m = zero_model(n);
  const SpectralField z0({1.0, -2.0, 0.5, 3.0});
  const double h = 0.8;
  const double T = 2.0;
  for (double dt : {0.01, 0.001}) {
    ScriptedSource zero({0.0}, {});
    const auto path = euler_spde(z0, m, h, T, dt, zero);
    EXPECT_NEAR(path.times.back(), T, 1e-9);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(path.values.back()[i], std::exp(-h * T) * z0[i], 2.0 * h * h * T * dt * std::abs(z0[i]));
    }
  }
}

TEST(EulerSpde, StationaryVariance) {
  const auto m = zero_model(2);
  RandomStream rng(4);
  const auto path = euler_spde(SpectralField({0.0, 0.0}), m, 1.0, 20'000.0, 0.01, rng, {10, 0});
  std::vector<double> sq1, sq2;
  for (const auto& v : path.values) {
    sq1.push_back(v[0] * v[0]);
    sq2.push_back(v[1] * v[1]);
  }
  EXPECT_NEAR(testing::mean(sq1), 1.0, 0.05);
  EXPECT_NEAR(testing::mean(sq2), 0.25, 0.05 * 0.25);
}

TEST(EulerSpde, StationaryVarianceBiasIsFirstOrder) {
  const auto m = zero_model(1);
  std::vector<double> bias;
  for (double dt : {0.2, 0.1}) {
    RandomStream rng(5);
    const auto path = euler_spde(SpectralField({0.0}), m, 1.0, 100'000.0, dt, rng);
    std::vector<double> sq;
    for (const auto& v : path.values) sq.push_back(v[0] * v[0]);
    bias.push_back(testing::mean(sq) - 1.0);
  }
  EXPECT_GT(bias[1], 0.0);
  EXPECT_NEAR(bias[0] / bias[1], 2.0, 1.0);
}

TEST(EulerSpde, StrongSelfConvergence) {
  // Coupled Brownian paths: coarse increments are sums of fine ones.
  const auto m = zero_model(2);
  const double h = 1.0;
  const double T = 1.0;
  // The reference is much finer than every coarse grid so that its own
  // error does not tilt the slope.
  const std::size_t fine = 4096;
  const std::vector<std::size_t> factors{8, 16, 32, 64, 128};
  std::vector<double> err_sq(factors.size(), 0.0);
  RandomStream rng(6);
  const std::size_t reps = 400;
  for (std::size_t r = 0; r < reps; ++r) {
    // noise[m][i]: standard normal for fine step m, coordinate i.
    std::vector<double> noise(fine * 2);
    for (auto& v : noise) v = rng.normal();
    const SpectralField z0({0.5, -0.3});
    ScriptedSource ref_src(noise, {});
    const auto ref = euler_spde(z0, m, h, T, T / fine, ref_src);
    for (std::size_t f = 0; f < factors.size(); ++f) {
      const std::size_t k = factors[f];
      std::vector<double> coarse;
      for (std::size_t c = 0; c < fine / k; ++c) {
        for (std::size_t i = 0; i < 2; ++i) {
          double s = 0.0;
          for (std::size_t q = 0; q < k; ++q) s += noise[(c * k + q) * 2 + i];
          coarse.push_back(s / std::sqrt(static_cast<double>(k)));
        }
      }
      ScriptedSource src(coarse, {});
      const auto path = euler_spde(z0, m, h, T, T * static_cast<double>(k) / fine, src);
      for (std::size_t i = 0; i < 2; ++i) {
        const double e = path.values.back()[i] - ref.values.back()[i];
        err_sq[f] += e * e / reps;
      }
    }
  }
  std::vector<double> log_dt, log_err;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    log_dt.push_back(std::log(static_cast<double>(factors[f]) / fine));
    log_err.push_back(0.5 * std::log(err_sq[f]));
  }
  const double slope = stats::least_squares(log_dt, log_err).slope;
  // Additive noise: Euler-Maruyama attains strong order 1, which is at
  // least the generic order 1/2.
  EXPECT_NEAR(slope, 1.0, 0.15);
}

TEST(EulerSpde, RejectsBadArguments) {
  const auto m = zero_model(2);
  RandomStream rng(7);
  EXPECT_THROW(euler_spde(SpectralField({0.0, 0.0}), m, 1.0, 1.0, 0.0, rng), ContractError);
  EXPECT_THROW(euler_spde(SpectralField({0.0, 0.0}), m, 0.0, 1.0, 0.1, rng), ContractError);
}

TEST(AcfRateFit, RecoversSyntheticOuRate) {
  RandomStream rng(8);
  const auto path = exact_ou(1.0, 1.0, 5000.0, 0.05, rng);
  EXPECT_NEAR(acf_rate_fit(path, 1, 3.0), 1.0, 0.1);
}

TEST(AcfRateFit, WhiteNoiseFailsAndGridMustBeUniform) {
  RandomStream rng(9);
  PathSample noise;
  for (int k = 0; k < 1000; ++k) {
    noise.times.push_back(k);
    noise.values.push_back(SpectralField({rng.normal()}));
  }
  EXPECT_THROW(acf_rate_fit(noise, 1, 10.0), FitFailureError);
  auto bent = exact_ou(1.0, 1.0, 10.0, 0.1, rng);
  bent.times.back() += 0.05;
  EXPECT_THROW(acf_rate_fit(bent, 1, 3.0), ContractError);
  EXPECT_THROW(acf_rate_fit(bent, 0, 3.0), ContractError);
}

TEST(AcfRateFit, InterpolatedChainTracksSpeed) {
  // Replica median of the fitted coordinate-1 decay rate. At N = 1024 the
  // chain decays faster than the limit: per step the mean contraction is
  // alpha delta (1 + (ell / 2) N^{-1/3}), the second factor coming from the
  // correlation between acceptance and the proposal noise.
  const std::size_t n = 1024;
  const auto m = zero_model(n);
  const double ell = speed_and_optimum(linspace(0.5, 2.5, 21)).ell_star;
  const KernelParams p(n, 1.0 / 3.0, ell);
  const double contraction = limiting_alpha(ell) * p.delta() * (1.0 + 0.5 * ell * std::cbrt(1.0 / n));
  const double predicted = -std::log1p(-contraction) / p.dt();
  std::vector<double> rates;
  for (std::uint64_t r = 0; r < 11; ++r) {
    RandomStream rng(100 + r);
    const auto t = run_chain(sample_target_exact(m, n, rng), m, p, 20'000, rng, RecordingPolicy::thinned(1, 1));
    const auto path = interpolate_chain(t, p, time_grid(trace_duration(t), 2.5 * p.dt()));
    rates.push_back(acf_rate_fit(path, 1, 3.0 / speed(ell)));
  }
  EXPECT_NEAR(stats::median(rates) / predicted, 1.0, 0.10);
  EXPECT_NEAR(predicted / speed(ell), 1.11, 0.01);
}

TEST(PathCsv, WritesHeaderAndRows) {
  PathSample p;
  p.times = {0.0, 0.5};
  p.values = {SpectralField({1.0, 2.0}), SpectralField({-0.25, 3.0})};
  std::ostringstream out;
  write_path_csv(out, p);
  EXPECT_EQ(out.str(), "time,x1,x2\n0,1,2\n0.5,-0.25,3\n");
}

}  // namespace
}  // namespace mala
