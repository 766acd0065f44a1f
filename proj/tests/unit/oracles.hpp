#pragma once

// Slow reference implementations used as test oracles. Each takes a
// different route from the library code it checks.

#include <hdvar/common.hpp>
#include <hdvar/var_model.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace hdvar::testing {

/// FISTA on (1/T)|y - X b|^2 + lambda |b|_1 with a fixed step 1/L.
inline Vector proximal_lasso(const Matrix& X, const Vector& y, double lambda, int iterations = 200000) {
  const double T = static_cast<double>(X.rows());
  const Matrix G = X.transpose() * X / T;
  const Vector c = X.transpose() * y / T;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  const double L = 2.0 * es.eigenvalues().maxCoeff();
  Vector b = Vector::Zero(X.cols());
  Vector z = b;
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    const Vector grad = 2.0 * (G * z - c);
    Vector next = z - grad / L;
    for (Index j = 0; j < next.size(); ++j) {
      const double v = next[j];
      const double thr = lambda / L;
      next[j] = v > thr ? v - thr : (v < -thr ? v + thr : 0.0);
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = next + ((t - 1.0) / t_next) * (next - b);
    const double change = (next - b).lpNorm<Eigen::Infinity>();
    b = next;
    t = t_next;
    if (change < 1e-15 && it > 100) break;
  }
  return b;
}

inline double lasso_objective(const Matrix& X, const Vector& y, const Vector& b, double lambda) {
  return (y - X * b).squaredNorm() / static_cast<double>(X.rows()) + lambda * b.lpNorm<1>();
}

/// Random stable VAR(p) by rescaling random lag matrices until the dense
/// companion eigenvalues fall inside radius `target`.
inline VarSpec random_stable_spec(std::mt19937_64& rng, int n, int p, double target = 0.9) {
  std::normal_distribution<double> normal;
  std::vector<Matrix> lags;
  for (int k = 0; k < p; ++k) {
    Matrix a(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) a(i, j) = normal(rng) / std::sqrt(static_cast<double>(n * p));
    lags.push_back(a);
  }
  Matrix F = Matrix::Zero(n * p, n * p);
  for (int k = 0; k < p; ++k) F.block(0, k * n, n, n) = lags[static_cast<std::size_t>(k)];
  if (p > 1) F.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
  Eigen::EigenSolver<Matrix> es(F, false);
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  // Scaling A_k by s^k scales every companion eigenvalue by s.
  const double s = rho > 0.0 ? target / rho : 1.0;
  double sk = 1.0;
  for (auto& a : lags) {
    sk *= s;
    a *= sk;
  }
  return VarSpec(lags);
}

}  // namespace hdvar::testing
