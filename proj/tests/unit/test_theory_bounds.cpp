#include "oracles.hpp"

#include <hdvar/dgp.hpp>
#include <hdvar/lasso.hpp>
#include <hdvar/theory_bounds.hpp>

#include <boost/math/special_functions/gamma.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

namespace hdvar {
namespace {

// Stationary covariance of the companion state via vec(G) = (I - F (x) F)^{-1} vec(Q).
Matrix lyapunov_gram(const VarSpec& spec, const Matrix& sigma) {
  const Matrix F = build_companion(spec).data;
  const Index d = F.rows();
  Matrix kron(d * d, d * d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) kron.block(i * d, j * d, d, d) = F(i, j) * F;
  Matrix Q = Matrix::Zero(d, d);
  Q.topLeftCorner(sigma.rows(), sigma.cols()) = sigma;
  const Vector q = Eigen::Map<const Vector>(Q.data(), d * d);
  const Vector sol = (Matrix::Identity(d * d, d * d) - kron).partialPivLu().solve(q);
  return Eigen::Map<const Matrix>(sol.data(), d, d);
}

TEST(PopulationGram, MatchesLyapunovSolve) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3, p = 1 + trial % 2;
    const VarSpec spec = testing::random_stable_spec(rng, n, p, 0.85);
    Matrix a = Matrix::Random(n, n);
    const Matrix sigma = a * a.transpose() + Matrix::Identity(n, n);
    const Matrix expected = lyapunov_gram(spec, sigma);
    const Matrix got = population_gram(spec, sigma, p);
    EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-9 * expected.cwiseAbs().maxCoeff()) << "trial " << trial;
  }
}

TEST(PopulationGram, ScalarAr1ClosedFormAndPadding) {
  // Gamma(s) = a^s / (1 - a^2) for unit innovation variance.
  const VarSpec spec({Matrix::Constant(1, 1, 0.6)});
  const Matrix g = population_gram(spec, Matrix::Identity(1, 1), 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(g(i, j), std::pow(0.6, std::abs(i - j)) / 0.64, 1e-11);
  EXPECT_THROW(population_gram(VarSpec({Matrix::Constant(1, 1, 1.0)}), Matrix::Identity(1, 1), 1), ValidationError);
}

TEST(DeviationBound, StatisticMatchesHandComputation) {
  const DesignPair d = build_block_design(5, SimulationDesign{5, 0.15, -0.1, 2, 1e-5, 0.8});
  const TimeSeriesPanel panel = simulate(d.spec, d.innov, 60, 50, 4);
  const DesignMatrices design = build_design(panel, 2);
  const DeviationBoundReport r = deviation_bound_check(design, d.spec, 0.0);
  const int Teff = design.T_eff();
  for (int i = 0; i < 5; ++i) {
    double worst = 0.0;
    for (int j = 0; j < 10; ++j) {
      double s = 0.0;
      for (int t = 0; t < Teff; ++t) {
        const int row = t + 2;  // y_t with t = p+1..T, 0-based
        double u = panel.data(row, i);
        for (int k = 0; k < 5; ++k) u -= d.spec.lag(1)(i, k) * panel.data(row - 1, k) + d.spec.lag(2)(i, k) * panel.data(row - 2, k);
        const int lag = j / 5 + 1, series = j % 5;
        s += panel.data(row - lag, series) * u;
      }
      worst = std::max(worst, std::abs(2.0 * s / Teff));
    }
    EXPECT_NEAR(r.statistic[static_cast<std::size_t>(i)], worst, 1e-12 * std::max(1.0, worst));
  }
  EXPECT_FALSE(r.joint);
  const double top = r.max_statistic();
  EXPECT_TRUE(deviation_bound_check(design, d.spec, top).joint);
  EXPECT_FALSE(deviation_bound_check(design, d.spec, top * (1 - 1e-9)).joint);
}

TEST(DeviationBound, Pi1) {
  EXPECT_NEAR(pi1(3.0), 10.0 * std::exp(-3.0), 1e-15);
  EXPECT_NEAR(pi1(3.0), 0.497870683678639, 1e-12);
}

TEST(GramConstants, DefaultsFromSpecAndInnovation) {
  const VarSpec ar({Matrix::Constant(1, 1, 0.5)});
  const GramConstants g = default_gram_constants(ar, InnovationSpec::gaussian(Matrix::Identity(1, 1)));
  EXPECT_NEAR(g.c_phi, std::log(2.0), 1e-5);
  EXPECT_TRUE(std::isinf(g.a2));
  const auto sc = InnovationSpec::stochastic_covariance(Matrix::Identity(1, 1), Matrix::Constant(1, 1, 0.8));
  EXPECT_NEAR(innovation_a2(sc), -std::log(0.64), 1e-14);
}

TEST(Pi2, DecreasesInTAndA) {
  GramConstants k;
  k.c_phi = 0.3;
  k.a2 = 0.4;
  double prev = std::numeric_limits<double>::infinity();
  for (const int T : {50, 100, 200, 400, 800}) {
    const double v = pi2(0.5, 10, 2, T, k);
    EXPECT_LT(v, prev);
    prev = v;
  }
  prev = std::numeric_limits<double>::infinity();
  for (const double a : {0.1, 0.2, 0.5, 1.0, 2.0}) {
    const double v = pi2(a, 10, 2, 100, k);
    EXPECT_LE(v, prev);
    prev = v;
  }
  // Hand evaluation at n = 2, p = 1, T = 4, xi = 1.
  const double head = 2.0 / (2.0 * 16.0) + 8.0 / (2.0 * 4.0);
  const double dep = std::exp(-0.3 * 2.0) + std::exp(-2.0 * 0.3 * 2.0);
  EXPECT_NEAR(pi2(0.5, 2, 1, 4, k), head + 4.0 / 0.5 * dep, 1e-14);
  EXPECT_THROW(pi2(0.0, 2, 1, 4, k), ValidationError);
}

TEST(Pi2, SideConditionsByHand) {
  GramConstants k;
  k.c_phi = 0.3;
  k.a2 = 0.4;
  const GramSideConditions s = gram_side_conditions(1.0, 10, 2, 500, k);
  EXPECT_NEAR(s.p_limit, 500.0 / (1.0 * (2.0 + 1.4 / 0.4)), 1e-12);
  EXPECT_TRUE(s.p_ok);
  const double lg = std::log(10.0 * 2 * 500);
  EXPECT_NEAR(s.a_min, std::sqrt(2.0 * 4.0 * lg * lg / 500.0), 1e-12);
  EXPECT_EQ(s.a_ok, 1.0 >= s.a_min);
  EXPECT_FALSE(gram_side_conditions(s.a_min * 0.99, 10, 2, 500, k).a_ok);
}

TEST(GramConcentration, DeviationShrinksLikeRootT) {
  // Quadrupling T should roughly halve the median max-norm deviation.
  const VarSpec spec({0.5 * Matrix::Identity(3, 3)});
  const auto innov = InnovationSpec::gaussian(Matrix::Identity(3, 3));
  const Matrix gamma = population_gram(spec, Matrix::Identity(3, 3), 1);
  auto median_dev = [&](int T) {
    std::vector<double> devs;
    for (std::uint64_t r = 0; r < 20; ++r) {
      const TimeSeriesPanel panel = simulate(spec, innov, T + 1, 100, derive_seed(99, {static_cast<std::uint64_t>(T), r}));
      devs.push_back(gram_deviation(make_gram_cache(build_design(panel, 1)).G, gamma));
    }
    std::nth_element(devs.begin(), devs.begin() + 10, devs.end());
    return devs[10];
  };
  const double ratio = median_dev(500) / median_dev(2000);
  EXPECT_GT(ratio, 2.0 / 1.6);
  EXPECT_LT(ratio, 2.0 * 1.6);
}

TEST(GramConcentration, ReportFlagsExceedance) {
  GramCache cache;
  cache.G = Matrix::Identity(2, 2);
  cache.T_eff = 100;
  Matrix gamma = Matrix::Identity(2, 2);
  gamma(0, 1) = gamma(1, 0) = 0.3;
  GramConstants k;
  k.c_phi = 0.5;
  k.a2 = 1.0;
  EXPECT_TRUE(gram_concentration_check(cache, gamma, 0.2, 2, 1, k).exceeds);
  const GramReport r = gram_concentration_check(cache, gamma, 0.3, 2, 1, k);
  EXPECT_FALSE(r.exceeds);
  EXPECT_NEAR(r.gamma_min_eigenvalue, 0.7, 1e-14);
}

TEST(Rsc, PopulationGramHasNoViolations) {
  std::mt19937_64 rng(12);
  const VarSpec spec = testing::random_stable_spec(rng, 4, 2, 0.8);
  const Matrix gamma = population_gram(spec, Matrix::Identity(4, 4), 2);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gamma, Eigen::EigenvaluesOnly);
  RscInputs in;
  in.beta_star = spec.stacked().col(0);
  in.sigma_sq = es.eigenvalues().minCoeff();
  in.q = 0.0;
  in.r_q = static_cast<double>((in.beta_star.array() != 0.0).count());
  const RscReport r = rsc_check(gamma, in, 300, 5, &gamma);
  EXPECT_EQ(r.samples, 300);
  EXPECT_EQ(r.violations, 0);
  EXPECT_EQ(r.cone_failures, 0);
  EXPECT_TRUE(r.hypothesis_holds);
  EXPECT_GE(r.min_ratio, 2.0 * (1 - 1e-10));
}

TEST(Rsc, DeficientGramIsCaught) {
  // A Gram matrix with a null direction on the support must violate.
  Vector beta(3);
  beta << 1.0, 0.0, 0.0;
  RscInputs in;
  in.beta_star = beta;
  in.sigma_sq = 1.0;
  in.r_q = 1.0;
  Matrix g = Matrix::Identity(3, 3);
  g(0, 0) = 0.0;
  const RscReport r = rsc_check(g, in, 30, 1);
  EXPECT_GT(r.violations, 0);
  EXPECT_FALSE(r.deviation.has_value());
}

TEST(Rsc, ConeMembership) {
  Vector beta(4);
  beta << 1.0, 0.0, 0.0, 0.1;
  const std::vector<int> s{0};
  Vector d(4);
  d << 1.0, 3.0, 0.0, 0.4;  // off 3.4 <= 3 * 1 + 4 * 0.1
  EXPECT_TRUE(in_cone(d, beta, s));
  d[3] = 0.5;
  EXPECT_FALSE(in_cone(d, beta, s));
}

TEST(ClosedFormBounds, L2AndPrediction) {
  EXPECT_NEAR(l2_error_bound(0.5, 3.0, 0.0, 2.0), 45.0 * 3.0 * 0.0625, 1e-14);
  EXPECT_NEAR(l2_error_bound(0.5, 3.0, 0.5, 2.0), 45.0 * 3.0 * std::pow(0.25, 1.5), 1e-14);
  EXPECT_NEAR(prediction_error_bound(0.2, 1.25), 3.0, 1e-15);
  EXPECT_THROW(l2_error_bound(0.5, 1.0, 0.0, 0.0), ValidationError);
}

TEST(TruncatedMoment, QuadratureMatchesIncompleteGamma) {
  // E[X^p 1{X >= M}] = c^{-p/alpha} Gamma(1 + p/alpha, c M^alpha).
  for (const double p : {1.0, 2.0, 3.0})
    for (const double alpha : {0.5, 1.0, 2.0})
      for (const double c : {0.5, 1.0, 2.0})
        for (const double M : {0.5, 1.5, 3.0}) {
          const TruncatedMoment t = truncated_moment(p, alpha, c, M);
          const double closed =
              std::pow(c, -p / alpha) * boost::math::tgamma(1.0 + p / alpha, c * std::pow(M, alpha));
          EXPECT_NEAR(t.exact, closed, 1e-9 * closed) << p << ' ' << alpha << ' ' << c << ' ' << M;
          EXPECT_TRUE(t.lower_holds());
        }
}

TEST(TruncatedMoment, UpperSandwichFailsForLargeShapeRatio) {
  // p = 2, alpha = 1, c = 1, M = 1.5: exact 7.25 e^{-1.5}, claimed upper 6.75 e^{-1.5}.
  const TruncatedMoment t = truncated_moment(2.0, 1.0, 1.0, 1.5);
  EXPECT_NEAR(t.exact, 7.25 * std::exp(-1.5), 1e-12);
  EXPECT_NEAR(t.upper, 6.75 * std::exp(-1.5), 1e-14);
  EXPECT_FALSE(t.upper_holds());
}

TEST(WeibullSums, GeometricClosedFormsAtShapeOne) {
  for (const double b : {0.5, 1.0, 2.0})
    for (const int n : {1, 3, 10}) {
      const double single = std::exp(-b * n) / (1.0 - std::exp(-b));
      const double dbl = std::exp(-2.0 * b * n) / ((1.0 - std::exp(-2.0 * b)) * (1.0 - std::exp(-b)));
      EXPECT_NEAR(weibull_single_sum_exact(1.0, b, n), single, 1e-13 * single);
      EXPECT_NEAR(weibull_double_sum_exact(1.0, b, n), dbl, 1e-13 * dbl);
    }
}

TEST(WeibullSums, ExactMatchesDirectSummation) {
  for (const double a : {0.5, 0.75})
    for (const int n : {1, 5}) {
      const double b = 0.5;
      long double single = 0.0L, dbl = 0.0L;
      std::vector<long double> terms;
      for (long k = n; k < 200000; ++k) terms.push_back(std::exp(-b * std::pow(static_cast<double>(k), a)));
      long double suffix = 0.0L;
      for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
        suffix += *it;
        single += *it;
        dbl += *it * suffix;
      }
      EXPECT_NEAR(weibull_single_sum_exact(a, b, n), static_cast<double>(single), 1e-12 * static_cast<double>(single));
      EXPECT_NEAR(weibull_double_sum_exact(a, b, n), static_cast<double>(dbl), 1e-12 * static_cast<double>(dbl));
    }
  EXPECT_THROW(weibull_single_sum_exact(1.5, 1.0, 1), ValidationError);
}

TEST(Martingale, BoundShapeAndOptimizer) {
  double prev = std::numeric_limits<double>::infinity();
  for (const double x : {0.05, 0.1, 0.2, 0.4}) {
    const double v = martingale_tail_bound(10, 1000, x, 2.0, 1.0, 1.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
  const MartingaleBound best = martingale_tail_bound_best(10, 1000, 0.3, 1.0, 1.0);
  for (const double M : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0})
    EXPECT_LE(best.value, martingale_tail_bound(10, 1000, 0.3, M, 1.0, 1.0) * (1 + 1e-12));
  EXPECT_NEAR(best.value, martingale_tail_bound(10, 1000, 0.3, best.M, 1.0, 1.0), 1e-15);
}

TEST(Martingale, CorollaryPremises) {
  const MartingaleCorollary c = martingale_corollary(10, 1000, 1.0, 3.0, 2.0, 1.0);
  const double thr = std::pow(3.0 + std::log(10.0) + std::log(1000.0), 0.5) * std::sqrt(3.0 + std::log(10.0)) /
                     std::sqrt(1000.0);
  EXPECT_NEAR(c.x_threshold, thr, 1e-14);
  EXPECT_TRUE(c.premises_hold);
  EXPECT_NEAR(c.bound, pi1(3.0), 1e-15);
  const MartingaleCorollary low = martingale_corollary(10, 1000, thr / 2, 3.0, 2.0, 1.0);
  EXPECT_FALSE(low.premises_hold);
  EXPECT_FALSE(low.violation.empty());
  EXPECT_FALSE(martingale_corollary(10, 5, 10.0, 3.0, 2.0, 1.0).premises_hold);
}

}  // namespace
}  // namespace hdvar
