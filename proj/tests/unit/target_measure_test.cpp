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
#include <vector>

#include <gtest/gtest.h>

#include "mala/errors.hpp"
#include "mala/random.hpp"
#include "mala/target_measure.hpp"
#include "test_support.hpp"

namespace mala {
namespace {

using testing::axpy;
using testing::random_field;

constexpr PsiKind kAllKinds[] = {PsiKind::kZero, PsiKind::kQuadraticSobolev, PsiKind::kSmoothNonlinear};

double norm_s(const SpectralField& x, double s) { return std::sqrt(sobolev_norm_sq(x, {s})); }

TEST(TargetModel, ValidatesParameters) {
  EXPECT_THROW(TargetModel(CovarianceSpectrum(1.0, 4), {0.5}, PsiKind::kZero), ContractError);
  EXPECT_THROW(TargetModel(CovarianceSpectrum(1.0, 4), {-0.1}, PsiKind::kZero), ContractError);
  EXPECT_THROW(TargetModel(CovarianceSpectrum(1.0, 4), {0.0}, PsiKind::kQuadraticSobolev, -1.0), ContractError);
  EXPECT_NO_THROW(TargetModel(CovarianceSpectrum(1.0, 4), {0.49}, PsiKind::kSmoothNonlinear, 0.0));
}

TEST(Psi, Examples) {
  const CovarianceSpectrum spec(1.0, 8);
  RandomStream rng(1);
  const auto x = random_field(8, rng);
  EXPECT_EQ(psi(TargetModel(spec, {0.25}, PsiKind::kZero), x), 0.0);
  EXPECT_NEAR(psi(TargetModel(spec, {0.25}, PsiKind::kQuadraticSobolev, 1.0), SpectralField::unit(8, 2)),
              0.5 * std::sqrt(2.0), 1e-15);
  EXPECT_EQ(psi(TargetModel(spec, {0.25}, PsiKind::kSmoothNonlinear, 1.0), SpectralField::zeros(8)), 0.0);
}

TEST(Psi, SmoothNonlinearClosedForm) {
  const TargetModel m(CovarianceSpectrum(1.0, 3), {0.0}, PsiKind::kSmoothNonlinear, 2.0);
  // ||x||^2 = 9 + 16 = 25.
  EXPECT_NEAR(psi(m, SpectralField({3.0, 4.0, 0.0})), 2.0 * (std::sqrt(26.0) - 1.0), 1e-14);
}

TEST(Psi, BoundedBelowByZero) {
  const CovarianceSpectrum spec(1.2, 32);
  RandomStream rng(9);
  for (auto kind : kAllKinds) {
    const TargetModel m(spec, {0.3}, kind, 1.7);
    for (int rep = 0; rep < 200; ++rep) EXPECT_GE(psi(m, random_field(32, rng, 10.0)), 0.0);
  }
}

TEST(GradPsi, Examples) {
  const CovarianceSpectrum spec(1.0, 4);
  RandomStream rng(2);
  const auto g0 = grad_psi(TargetModel(spec, {0.25}, PsiKind::kZero), random_field(4, rng));
  EXPECT_EQ(g0, DualField::zeros(4));
  const auto g = grad_psi(TargetModel(spec, {0.25}, PsiKind::kQuadraticSobolev, 1.0), SpectralField::unit(4, 2));
  EXPECT_NEAR(g[1], std::sqrt(2.0), 1e-15);
  EXPECT_EQ(g[0], 0.0);
}

TEST(GradPsi, MatchesFiniteDifferences) {
  const CovarianceSpectrum spec(1.0, 16);
  RandomStream rng(31);
  const double eps = 1e-5;
  for (auto kind : kAllKinds) {
    const TargetModel m(spec, {0.25}, kind, 1.3);
    for (int rep = 0; rep < 100; ++rep) {
      const auto x = random_field(16, rng, 1.0, 0.5);
      const auto v = random_field(16, rng, 1.0, 0.5);
      const double fd = (psi(m, axpy(eps, v, x)) - psi(m, axpy(-eps, v, x))) / (2.0 * eps);
      const double exact = dual_pairing(grad_psi(m, x), v);
      if (kind == PsiKind::kZero) {
        EXPECT_EQ(exact, 0.0);
        EXPECT_EQ(fd, 0.0);
      } else {
        EXPECT_NEAR(fd, exact, 1e-5 * std::max(1.0, std::abs(exact))) << to_string(kind);
      }
    }
  }
}

TEST(GradPsi, SmoothNonlinearGradientBounded) {
  const double a = 0.8;
  const double s = 0.3;
  const TargetModel m(CovarianceSpectrum(1.0, 64), {s}, PsiKind::kSmoothNonlinear, a);
  RandomStream rng(4);
  for (double scale : {1e-3, 1.0, 1e3, 1e6}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto g = grad_psi(m, random_field(64, rng, scale));
      // ||g||_{-s}^2 = sum j^{-2s} g_j^2
      double acc = 0.0;
      for (std::size_t j = 1; j <= 64; ++j) acc += std::pow(static_cast<double>(j), -2.0 * s) * g[j - 1] * g[j - 1];
      EXPECT_LE(std::sqrt(acc), a * (1.0 + 1e-12));
    }
  }
}

TEST(LogDensity, Examples) {
  const CovarianceSpectrum spec(1.0, 4);
  const TargetModel zero(spec, {0.0}, PsiKind::kZero);
  EXPECT_EQ(log_density_unnorm(zero, SpectralField::zeros(4)), 0.0);
  EXPECT_DOUBLE_EQ(log_density_unnorm(zero, SpectralField::unit(4, 1)), -0.5);
}

TEST(LogDensity, QuadraticMatchesShiftedPrecision) {
  const std::size_t n = 20;
  const CovarianceSpectrum spec(1.0, n);
  const TargetModel m(spec, {0.0}, PsiKind::kQuadraticSobolev, 1.0);
  RandomStream rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    const auto x = random_field(n, rng);
    long double q = 0.0L;
    for (std::size_t j = 1; j <= n; ++j) {
      const long double prec = static_cast<long double>(j) * j + 1.0L;
      q += prec * x[j - 1] * x[j - 1];
    }
    const double oracle = static_cast<double>(-0.5L * q);
    EXPECT_NEAR(log_density_unnorm(m, x), oracle, 1e-13 * std::abs(oracle));
  }
}

TEST(Drift, Examples) {
  const CovarianceSpectrum spec(1.0, 4);
  RandomStream rng(6);
  const auto x = random_field(4, rng);
  const auto mu = drift_mu(TargetModel(spec, {0.0}, PsiKind::kZero), x);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(mu[i], -x[i]);
  const auto mq = drift_mu(TargetModel(spec, {0.0}, PsiKind::kQuadraticSobolev, 1.0), SpectralField::unit(4, 2));
  EXPECT_DOUBLE_EQ(mq[1], -1.25);
}

TEST(Drift, IsCovarianceTimesLogDensityGradient) {
  const std::size_t n = 12;
  const CovarianceSpectrum spec(1.0, n);
  RandomStream rng(12);
  const double eps = 1e-5;
  for (auto kind : kAllKinds) {
    const TargetModel m(spec, {0.2}, kind, 0.9);
    for (int rep = 0; rep < 10; ++rep) {
      const auto x = random_field(n, rng, 1.0, 1.0);
      const auto mu = drift_mu(m, x);
      for (std::size_t j = 1; j <= n; ++j) {
        const auto e = SpectralField::unit(n, j);
        const double d = (log_density_unnorm(m, axpy(eps, e, x)) - log_density_unnorm(m, axpy(-eps, e, x))) /
                         (2.0 * eps);
        const double lam_sq = std::pow(static_cast<double>(j), -2.0);
        EXPECT_NEAR(lam_sq * d, mu[j - 1], 1e-6 * std::max(1.0, std::abs(mu[j - 1]))) << to_string(kind);
      }
    }
  }
}

TEST(Drift, LipschitzConstantIndependentOfDimension) {
  // For every kind the drift is Lipschitz in H^s with constant 1 + a.
  const double a = 1.5;
  const double s = 0.2;
  for (std::size_t n : {16u, 256u, 4096u}) {
    const CovarianceSpectrum spec(1.0, n);
    RandomStream rng(100 + n);
    for (auto kind : kAllKinds) {
      const TargetModel m(spec, {s}, kind, a);
      double worst = 0.0;
      for (int rep = 0; rep < 40; ++rep) {
        const auto x = sample_reference(n, spec, rng);
        const auto y = rep % 2 == 0 ? sample_reference(n, spec, rng) : axpy(1e-3, sample_reference(n, spec, rng), x);
        const auto dmu = axpy(-1.0, drift_mu(m, y), drift_mu(m, x));
        worst = std::max(worst, norm_s(dmu, s) / norm_s(axpy(-1.0, y, x), s));
      }
      EXPECT_LE(worst, 1.0 + a + 1e-12) << "N=" << n << " " << to_string(kind);
      EXPECT_GE(worst, 1.0 - 1e-12);
    }
  }
}

TEST(SampleTargetExact, ZeroKindIsReferenceSampler) {
  const CovarianceSpectrum spec(1.0, 16);
  const TargetModel m(spec, {0.0}, PsiKind::kZero);
  RandomStream a(55);
  RandomStream b(55);
  EXPECT_EQ(sample_target_exact(m, 16, a), sample_reference(16, spec, b));
}

TEST(SampleTargetExact, QuadraticVariance) {
  const CovarianceSpectrum spec(1.0, 1);
  const TargetModel m(spec, {0.0}, PsiKind::kQuadraticSobolev, 1.0);
  RandomStream rng(66);
  std::vector<double> sq(100'000);
  for (auto& v : sq) {
    const double x = sample_target_exact(m, 1, rng)[0];
    v = x * x;
  }
  EXPECT_NEAR(testing::mean(sq), 0.5, 3.0 * testing::std_error(sq));
}

TEST(SampleTargetExact, SmoothNonlinearUnsupported) {
  const TargetModel m(CovarianceSpectrum(1.0, 4), {0.0}, PsiKind::kSmoothNonlinear);
  RandomStream rng(1);
  EXPECT_THROW(sample_target_exact(m, 4, rng), UnsupportedTargetError);
}

}  // namespace
}  // namespace mala
