#include "oracles.hpp"

#include <hdvar/lasso.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace hdvar {
namespace {

struct Instance {
  DesignMatrices design;
  Matrix X;
  Vector y;
};

Instance random_instance(std::mt19937_64& rng, int T, int k) {
  std::normal_distribution<double> normal;
  Instance in;
  in.X.resize(T, k);
  for (Index i = 0; i < T; ++i)
    for (Index j = 0; j < k; ++j) in.X(i, j) = normal(rng);
  // Correlated columns make coordinate descent work for its answer.
  for (Index j = 1; j < k; ++j) in.X.col(j) += 0.6 * in.X.col(j - 1);
  Vector b = Vector::Zero(k);
  for (Index j = 0; j < k; j += 3) b[j] = normal(rng);
  in.y = in.X * b;
  for (Index i = 0; i < T; ++i) in.y[i] += 0.5 * normal(rng);
  in.design.X = in.X;
  in.design.Y = in.y;
  in.design.n = 1;
  in.design.p = 1;
  return in;
}

TEST(Lasso, SingleRegressorMatchesSoftThreshold) {
  // One column: b = soft(c, lambda/2) / G.
  Matrix X(4, 1);
  X << 1.0, -2.0, 0.5, 3.0;
  Vector y(4);
  y << 2.0, -3.0, 1.0, 4.0;
  DesignMatrices d{X, y, 1, 1};
  const double G = X.squaredNorm() / 4.0;
  const double c = X.col(0).dot(y) / 4.0;
  for (const double lambda : {0.1, 1.0, 5.0, 2.0 * std::abs(c) + 0.1}) {
    const EquationFit f = fit_lasso(d, 0, lambda);
    const double z = c;
    const double t = lambda / 2.0;
    const double expected = (z > t ? z - t : (z < -t ? z + t : 0.0)) / G;
    EXPECT_NEAR(f.beta[0], expected, 1e-12) << "lambda " << lambda;
    EXPECT_TRUE(f.converged);
  }
}

TEST(Lasso, ObjectiveMatchesProximalOracleOnRandomInstances) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> cols(2, 12);
  std::uniform_real_distribution<double> frac(0.02, 0.9);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = cols(rng);
    Instance in = random_instance(rng, 40, k);
    const GramCache g = make_gram_cache(in.design);
    const double lambda = frac(rng) * lambda_max(g, 0);
    const EquationFit f = fit_lasso(in.design, g, 0, lambda);
    ASSERT_TRUE(f.converged);
    EXPECT_LT(f.kkt_residual, 1e-6);
    const Vector oracle = testing::proximal_lasso(in.X, in.y, lambda);
    const double ours = testing::lasso_objective(in.X, in.y, f.beta, lambda);
    const double ref = testing::lasso_objective(in.X, in.y, oracle, lambda);
    EXPECT_NEAR(ours, ref, 1e-6) << "trial " << trial << " k " << k;
    EXPECT_LE(ours, ref + 1e-9);
  }
}

TEST(Lasso, KktResidualIsIndependentlyRecomputed) {
  std::mt19937_64 rng(5);
  Instance in = random_instance(rng, 60, 10);
  const GramCache g = make_gram_cache(in.design);
  const double lambda = 0.1 * lambda_max(g, 0);
  const EquationFit f = fit_lasso(in.design, g, 0, lambda);
  // Subgradient condition straight from the data, not from G.
  const Vector grad = 2.0 * in.X.transpose() * (in.y - in.X * f.beta) / 60.0;
  for (Index j = 0; j < grad.size(); ++j) {
    if (f.beta[j] != 0.0)
      EXPECT_NEAR(grad[j], lambda * (f.beta[j] > 0 ? 1.0 : -1.0), 1e-6);
    else
      EXPECT_LE(std::abs(grad[j]), lambda + 1e-6);
  }
}

TEST(Lasso, ZeroAtAndAboveLambdaMax) {
  std::mt19937_64 rng(3);
  Instance in = random_instance(rng, 30, 8);
  const GramCache g = make_gram_cache(in.design);
  const double lmax = lambda_max(g, 0);
  EXPECT_DOUBLE_EQ(lmax, 2.0 * g.C.col(0).lpNorm<Eigen::Infinity>());
  EXPECT_EQ(fit_lasso(in.design, g, 0, lmax).beta.lpNorm<1>(), 0.0);
  EXPECT_EQ(fit_lasso(in.design, g, 0, 1e9).beta.lpNorm<1>(), 0.0);
  EXPECT_GT(fit_lasso(in.design, g, 0, 0.9 * lmax).beta.lpNorm<1>(), 0.0);
}

TEST(Lasso, RejectsNonPositiveLambdaAndNaN) {
  std::mt19937_64 rng(4);
  Instance in = random_instance(rng, 30, 4);
  EXPECT_THROW(fit_lasso(in.design, 0, 0.0), ValidationError);
  EXPECT_THROW(fit_lasso(in.design, 0, -1.0), ValidationError);
  in.design.X(0, 0) = std::nan("");
  EXPECT_THROW(fit_lasso(in.design, 0, 1.0), ValidationError);
}

TEST(Lasso, PathIsDescendingWarmStartedAndSelectsMinimalBic) {
  std::mt19937_64 rng(8);
  Instance in = random_instance(rng, 80, 12);
  const GramCache g = make_gram_cache(in.design);
  const RegularizationPath path = compute_path(in.design, g, 0);
  ASSERT_GE(path.lambdas.size(), 2u);
  EXPECT_DOUBLE_EQ(path.lambdas.front(), lambda_max(g, 0));
  for (std::size_t k = 1; k < path.lambdas.size(); ++k) EXPECT_LT(path.lambdas[k], path.lambdas[k - 1]);
  if (!path.truncated) {
    EXPECT_NEAR(path.lambdas.back() / path.lambdas.front(), 1e-3, 1e-12);
  }
  for (std::size_t k = 0; k < path.fits.size(); ++k) {
    const auto& f = path.fits[k];
    const double rss = (in.y - in.X * f.beta).squaredNorm();
    EXPECT_NEAR(f.rss, rss, 1e-9 * (1.0 + rss));
    EXPECT_NEAR(path.bic[k], 80.0 * std::log(rss / 80.0) + f.df() * std::log(80.0), 1e-9);
  }
  const std::size_t best = bic_select(path);
  for (std::size_t k = 0; k < path.bic.size(); ++k) EXPECT_LE(path.bic[best], path.bic[k]);
}

TEST(Lasso, BicTiesGoToTheLargerLambda) {
  RegularizationPath path;
  path.lambdas = {3.0, 2.0, 1.0};
  path.fits.resize(3);
  for (auto& f : path.fits) f.rss = 1.0;
  path.bic = {5.0, 4.0, 4.0};
  EXPECT_EQ(bic_select(path), 1u);
  // Interpolating points are skipped even though their BIC is smallest.
  path.fits[2].rss = 0.0;
  path.bic = {5.0, 4.5, -1e300};
  EXPECT_EQ(bic_select(path), 1u);
  for (auto& f : path.fits) f.rss = 0.0;
  EXPECT_THROW(bic_select(path), NumericalError);
}

TEST(Lasso, BicScoreFormula) {
  EXPECT_DOUBLE_EQ(bic_score(50.0, 3, 100), 100.0 * std::log(0.5) + 3.0 * std::log(100.0));
}

TEST(Lasso, TheoreticalLambdaFormulaAndSideCondition) {
  const double eps = 3.0, tau = 1.5, alpha = 1.0;
  const int T = 498, n = 10, p = 2;
  const double expected =
      tau * std::pow(eps + std::log(T * 100.0 * p), 2.0 / alpha) * std::sqrt((eps + std::log(100.0 * p)) / T);
  EXPECT_NEAR(theoretical_lambda(T, n, p, eps, tau, alpha), expected, 1e-12 * expected);
  // T must exceed eps + log(n^2 p) = 3 + log(200) ~ 8.3.
  EXPECT_THROW(theoretical_lambda(8, n, p, eps, tau, alpha), ValidationError);
  EXPECT_NO_THROW(theoretical_lambda(9, n, p, eps, tau, alpha));
}

TEST(Design, LagMajorLayout) {
  Matrix data(5, 2);
  data << 1, 10, 2, 20, 3, 30, 4, 40, 5, 50;
  const DesignMatrices d = build_design(data, 2);
  ASSERT_EQ(d.T_eff(), 3);
  ASSERT_EQ(d.width(), 4);
  // Row for t = 3 (0-based 2): y_2, then y_1.
  EXPECT_EQ(d.X(0, 0), 2);
  EXPECT_EQ(d.X(0, 1), 20);
  EXPECT_EQ(d.X(0, 2), 1);
  EXPECT_EQ(d.X(0, 3), 10);
  EXPECT_EQ(d.Y(0, 0), 3);
  EXPECT_EQ(d.Y(2, 1), 50);
  EXPECT_THROW(build_design(data, 5), ValidationError);
}

TEST(Design, GramCacheMatchesDirectProducts) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  Matrix data(50, 3);
  for (Index i = 0; i < data.size(); ++i) data.data()[i] = normal(rng);
  const DesignMatrices d = build_design(data, 2);
  const GramCache g = make_gram_cache(d);
  EXPECT_LT((g.G - d.X.transpose() * d.X / 48.0).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((g.C - d.X.transpose() * d.Y / 48.0).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Oracle, OlsOnSupportSolvesNormalEquations) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  Matrix data(80, 3);
  for (Index i = 0; i < data.size(); ++i) data.data()[i] = normal(rng);
  const DesignMatrices d = build_design(data, 2);
  const std::vector<std::vector<int>> supports{{0, 4}, {}, {1, 2, 5}};
  const OracleFit fit = oracle_fit(d, supports);
  for (int i = 0; i < 3; ++i) {
    const auto& s = supports[static_cast<std::size_t>(i)];
    for (Index j = 0; j < d.width(); ++j)
      if (std::find(s.begin(), s.end(), static_cast<int>(j)) == s.end()) {
        EXPECT_EQ(fit.beta(j, i), 0.0);
      }
    if (s.empty()) continue;
    Matrix xs(d.T_eff(), static_cast<Index>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) xs.col(static_cast<Index>(k)) = d.X.col(s[k]);
    const Vector b = (xs.transpose() * xs).ldlt().solve(xs.transpose() * d.Y.col(i));
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_NEAR(fit.beta(s[k], i), b[static_cast<Index>(k)], 1e-10);
  }
}

TEST(Forecast, StackedAndLagFormsAgree) {
  std::mt19937_64 rng(9);
  const VarSpec spec = testing::random_stable_spec(rng, 3, 2);
  Matrix data(6, 3);
  std::normal_distribution<double> normal;
  for (Index i = 0; i < data.size(); ++i) data.data()[i] = normal(rng);
  const Vector a = forecast(spec.stacked(), data, 2);
  const Vector b = forecast(spec, data);
  const Vector manual = spec.lag(1) * data.row(5).transpose() + spec.lag(2) * data.row(4).transpose();
  EXPECT_LT((a - manual).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((b - manual).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FitAll, ResultDoesNotDependOnThreadCount) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> normal;
  Matrix data(60, 12);
  for (Index i = 0; i < data.size(); ++i) data.data()[i] = normal(rng);
  const DesignMatrices d = build_design(data, 2);
  const LassoFit one = fit_all_equations(d, PenaltyStrategy::bic(), {}, 1);
  const LassoFit four = fit_all_equations(d, PenaltyStrategy::bic(), {}, 4);
  EXPECT_EQ(one.beta, four.beta);
  EXPECT_EQ(one.lambda, four.lambda);
  EXPECT_TRUE(one.all_converged());
  for (const double r : one.kkt_residual) EXPECT_LT(r, 1e-6);
}

TEST(FitAll, FixedStrategyUsesTheGivenLambdaEverywhere) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  Matrix data(40, 5);
  for (Index i = 0; i < data.size(); ++i) data.data()[i] = normal(rng);
  const DesignMatrices d = build_design(data, 1);
  const LassoFit fit = fit_all_equations(d, PenaltyStrategy::fixed(0.3));
  for (const double l : fit.lambda) EXPECT_EQ(l, 0.3);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(fit.beta.col(i), fit_lasso(d, i, 0.3).beta);
}

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrows) {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](int k) { ++hits[static_cast<std::size_t>(k)]; });
  for (const int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](int k) {
                              if (k == 7) throw NumericalError("boom");
                            }),
               NumericalError);
}

}  // namespace
}  // namespace hdvar
