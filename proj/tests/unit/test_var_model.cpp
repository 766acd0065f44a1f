#include "oracles.hpp"

#include <hdvar/theory_bounds.hpp>
#include <hdvar/var_model.hpp>

#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include <random>

namespace hdvar {
namespace {

VarSpec scalar_ar(std::vector<double> a) {
  std::vector<Matrix> lags;
  for (const double v : a) lags.push_back(Matrix::Constant(1, 1, v));
  return VarSpec(lags);
}

TEST(VarSpec, RejectsBadShapesAndNonFinite) {
  EXPECT_THROW(VarSpec({}), ValidationError);
  EXPECT_THROW(VarSpec({Matrix::Zero(2, 3)}), ValidationError);
  EXPECT_THROW(VarSpec({Matrix::Zero(2, 2), Matrix::Zero(3, 3)}), ValidationError);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(VarSpec({bad}), ValidationError);
  EXPECT_THROW(VarSpec({Matrix::Zero(2, 2)}, Vector::Zero(3)), ValidationError);
}

TEST(VarSpec, StackedRoundTripAndJson) {
  std::mt19937_64 rng(1);
  const VarSpec spec = testing::random_stable_spec(rng, 3, 2);
  const Matrix b = spec.stacked();
  ASSERT_EQ(b.rows(), 6);
  ASSERT_EQ(b.cols(), 3);
  // Column i holds row i of each lag matrix.
  EXPECT_EQ(b(1, 2), spec.lag(1)(2, 1));
  EXPECT_EQ(b(3 + 2, 0), spec.lag(2)(0, 2));
  const VarSpec back = VarSpec::from_stacked(b, 3, 2);
  EXPECT_EQ(back.lag(1), spec.lag(1));
  EXPECT_EQ(back.lag(2), spec.lag(2));
  const nlohmann::json j = spec;
  const VarSpec parsed = var_spec_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(parsed.lag(1), spec.lag(1));
  EXPECT_EQ(parsed.lag(2), spec.lag(2));
  EXPECT_THROW(var_spec_from_json(nlohmann::json{{"n", 2}}), ValidationError);
}

TEST(Stability, ScalarAr2MatchesTheStationarityTriangle) {
  // AR(2) is stationary iff |a2| < 1, a1 + a2 < 1 and a2 - a1 < 1.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.2, 2.2);
  int checked = 0;
  for (int k = 0; k < 2000; ++k) {
    const double a1 = u(rng), a2 = u(rng) / 2.0;
    const double margin = std::min({1.0 - std::abs(a2), 1.0 - a1 - a2, 1.0 - a2 + a1});
    if (std::abs(margin) < 1e-3) continue;
    EXPECT_EQ(is_stable(scalar_ar({a1, a2})).stable, margin > 0.0) << a1 << ' ' << a2;
    ++checked;
  }
  EXPECT_GT(checked, 1500);
}

TEST(Stability, ScalarAr1RadiusIsAbsCoefficient) {
  EXPECT_NEAR(is_stable(scalar_ar({0.7})).spectral_radius, 0.7, 1e-14);
  EXPECT_NEAR(is_stable(scalar_ar({-0.95})).spectral_radius, 0.95, 1e-14);
  EXPECT_FALSE(is_stable(scalar_ar({1.0})).stable);
  EXPECT_FALSE(is_stable(scalar_ar({0.9999995})).stable);  // inside the default margin
}

TEST(Stability, ComponentWiseRadiusEqualsDenseCompanionRadius) {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution keep(0.25);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 8, p = 2;
    std::vector<Matrix> lags(p, Matrix::Zero(n, n));
    for (auto& a : lags)
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
          if (i == j || keep(rng)) a(i, j) = 0.35 * normal(rng);
    const VarSpec spec(lags);
    const CompanionMatrix F = build_companion(spec);
    Eigen::EigenSolver<Matrix> es(F.data, false);
    const double dense = es.eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_NEAR(is_stable(spec).spectral_radius, dense, 1e-9 * std::max(1.0, dense)) << "trial " << trial;
  }
}

TEST(Companion, Layout) {
  const VarSpec spec({Matrix::Constant(2, 2, 1.0), Matrix::Constant(2, 2, 2.0)});
  const CompanionMatrix F = build_companion(spec);
  ASSERT_EQ(F.data.rows(), 4);
  EXPECT_EQ(F.data.block(0, 0, 2, 2), Matrix::Constant(2, 2, 1.0));
  EXPECT_EQ(F.data.block(0, 2, 2, 2), Matrix::Constant(2, 2, 2.0));
  EXPECT_EQ(F.data.block(2, 0, 2, 2), Matrix::Identity(2, 2));
  EXPECT_EQ(F.data.block(2, 2, 2, 2), Matrix::Zero(2, 2));
}

TEST(Vma, RecursionEqualsCompanionPowers) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 6), lag(1, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = dim(rng), p = lag(rng);
    const VarSpec spec = testing::random_stable_spec(rng, n, p, 0.95);
    const VmaCoefficients vma = vma_coefficients(spec, 20);
    const Matrix F = build_companion(spec).data;
    Matrix Fk = Matrix::Identity(n * p, n * p);
    for (int k = 0; k <= 20; ++k) {
      EXPECT_LT((vma.phis[static_cast<std::size_t>(k)] - Fk.topLeftCorner(n, n)).cwiseAbs().maxCoeff(), 1e-10)
          << "trial " << trial << " k " << k;
      Fk = F * Fk;
    }
  }
  EXPECT_THROW(vma_coefficients(scalar_ar({0.5}), -1), ValidationError);
}

TEST(Vma, DefaultHorizonReachesTolerance) {
  const VarSpec spec = scalar_ar({0.5});
  const int K = default_vma_horizon(spec);
  EXPECT_LT(std::pow(0.5, K), 1e-12);
  EXPECT_GE(std::pow(0.5, K - 1), 1e-12);
}

TEST(TailSum, ProfileAndEnvelope) {
  // Scalar AR(1): phi_k = a^k, tail from m to K is a^m (1 - a^{K-m+1}) / (1 - a).
  const double a = 0.6;
  const VmaCoefficients vma = vma_coefficients(scalar_ar({a}), 40);
  for (const int m : {0, 3, 10}) {
    const double expected = std::pow(a, m) * (1.0 - std::pow(a, 41 - m)) / (1.0 - a);
    EXPECT_NEAR(tail_sum_profile(vma, m)[0], expected, 1e-13);
  }
  const TailSumFit fit = fit_tail_sum(vma, 1, 20);
  EXPECT_NEAR(fit.c_phi, -std::log(a), 1e-3);
  for (int m = 1; m <= 20; ++m) EXPECT_LE(tail_sum_profile(vma, m)[0], fit.c_bar * std::exp(-fit.c_phi * m) * (1 + 1e-12));
  EXPECT_THROW(tail_sum_profile(vma, 41), ValidationError);
}

TEST(GramEigenBounds, SandwichPopulationGram) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const VarSpec spec = testing::random_stable_spec(rng, 3, 2, 0.8);
    Matrix s = Matrix::Identity(3, 3);
    s(0, 1) = s(1, 0) = 0.3;
    const EigenBounds b = gram_eigen_bounds(spec, s, 2048);
    for (const int p : {1, 2, 3}) {
      const Matrix gamma = population_gram(spec, s, p);
      Eigen::SelfAdjointEigenSolver<Matrix> es(gamma, Eigen::EigenvaluesOnly);
      // Frequency grid makes the bounds approximate; allow a small slack.
      EXPECT_GE(es.eigenvalues().minCoeff(), b.lower * (1 - 1e-3)) << "trial " << trial;
      EXPECT_LE(es.eigenvalues().maxCoeff(), b.upper * (1 + 1e-3)) << "trial " << trial;
    }
  }
}

TEST(Sparsity, ProfileCountsAndPowers) {
  Matrix beta(4, 2);
  beta << 0.5, 0.0, -0.25, 0.0, 0.0, 1e-4, 0.0, -0.04;
  const SparsityProfile s0 = sparsity_profile(beta, 0.0, 0.0);
  EXPECT_EQ(s0.rq[0], 2.0);
  EXPECT_EQ(s0.rq[1], 2.0);
  const SparsityProfile s5 = sparsity_profile(beta, 0.5, 0.01);
  EXPECT_NEAR(s5.rq[0], std::sqrt(0.5) + std::sqrt(0.25), 1e-15);
  EXPECT_NEAR(s5.rq[1], 0.01 + 0.2, 1e-15);
  EXPECT_EQ(s5.active_sets[1], std::vector<int>{3});
  EXPECT_NEAR(s5.r_q(), std::sqrt(0.5) + 0.5, 1e-15);
  EXPECT_THROW(sparsity_profile(beta, 1.0, 0.0), ValidationError);
}

}  // namespace
}  // namespace hdvar
