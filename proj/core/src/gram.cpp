#include <hdvar/theory_bounds.hpp>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace hdvar {

Matrix population_gram(const VarSpec& spec, const Matrix& sigma, int p, double tol, int max_terms) {
  const int n = spec.n();
  require(p >= 1, "population_gram: p must be >= 1");
  require(tol > 0.0, "population_gram: tol must be positive");
  require(sigma.rows() == n && sigma.cols() == n, "population_gram: sigma must be n x n");
  require(is_stable(spec).stable, "population_gram: spec is not stable");

  // Phi_j for j = 0.. generated on demand; only the last max(p, spec.p()) + p are kept.
  const int keep = std::max(p, spec.p()) + p;
  std::deque<Matrix> phis;
  phis.push_back(Matrix::Identity(n, n));
  int generated = 0;  // index of phis.back()
  auto extend = [&] {
    const int k = generated + 1;
    Matrix next = Matrix::Zero(n, n);
    const auto front_index = generated + 1 - static_cast<int>(phis.size());
    for (int j = 1; j <= std::min(spec.p(), k); ++j) {
      const int idx = k - j - front_index;
      if (idx < 0) break;
      next.noalias() += phis[static_cast<std::size_t>(idx)] * spec.lag(j);
    }
    phis.push_back(std::move(next));
    ++generated;
    if (static_cast<int>(phis.size()) > keep) phis.pop_front();
  };
  auto phi = [&](int k) -> const Matrix& {
    while (generated < k) extend();
    const auto front_index = generated + 1 - static_cast<int>(phis.size());
    return phis[static_cast<std::size_t>(k - front_index)];
  };

  std::vector<Matrix> auto_cov(static_cast<std::size_t>(p), Matrix::Zero(n, n));
  bool converged = false;
  for (int j = 0; j < max_terms; ++j) {
    const Matrix sp = sigma * phi(j).transpose();
    double worst = 0.0;
    for (int s = 0; s < p; ++s) {
      const Matrix inc = phi(j + s) * sp;
      auto_cov[static_cast<std::size_t>(s)] += inc;
      worst = std::max(worst, inc.cwiseAbs().maxCoeff());
    }
    if (!std::isfinite(worst)) break;
    if (worst < tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NumericalError("population_gram: autocovariance series did not converge within " +
                         std::to_string(max_terms) + " terms");

  const Index dim = static_cast<Index>(n) * p;
  Matrix gamma(dim, dim);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      auto block = gamma.block(static_cast<Index>(a) * n, static_cast<Index>(b) * n, n, n);
      if (b >= a)
        block = auto_cov[static_cast<std::size_t>(b - a)];
      else
        block = auto_cov[static_cast<std::size_t>(a - b)].transpose();
    }
  return gamma;
}

double innovation_a2(const InnovationSpec& innov) {
  if (innov.is_gaussian()) return std::numeric_limits<double>::infinity();
  const double contraction = psi_contraction(innov.as_stochastic().psi);
  if (contraction <= 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(contraction);
}

GramConstants default_gram_constants(const VarSpec& spec, const InnovationSpec& innov) {
  GramConstants k;
  const int horizon = std::max(4, default_vma_horizon(spec));
  const auto vma = vma_coefficients(spec, horizon);
  k.c_phi = fit_tail_sum(vma, 1, std::max(2, horizon / 2)).c_phi;
  k.gamma1 = 1.0;
  k.a2 = innovation_a2(innov);
  k.gamma2 = 1.0;
  return k;
}

double pi2(double a, int n, int p, int T, const GramConstants& k) {
  require(a > 0.0, "pi2: a must be positive");
  require(n >= 1 && p >= 1 && T >= 1, "pi2: n, p, T must be positive");
  require(k.xi > 0.0, "pi2: xi must be positive");
  const double np = static_cast<double>(n) * p;
  const double tt = T;
  const double g = std::min(k.gamma1, k.gamma2);
  const double rate = std::min(k.c_phi, k.a2);
  const double head = 2.0 / (std::pow(np, k.xi) * std::pow(tt, 1.0 + k.xi)) + 8.0 / (std::pow(np, k.xi) * std::pow(tt, k.xi));
  const double dep = k.b1 * std::exp(-rate * std::pow(tt / 2.0, g)) +
                     k.b8 * std::exp(-2.0 * k.gamma1 * k.c_phi * std::pow(tt / 2.0, k.gamma1));
  return head + static_cast<double>(n) * n / a * dep;
}

GramSideConditions gram_side_conditions(double a, int n, int p, int T, const GramConstants& k) {
  GramSideConditions s;
  const double g = std::min(k.gamma1, k.gamma2);
  const double rate = std::min(2.0 * k.gamma1 * k.c_phi, k.a2);
  s.p_limit = std::pow(static_cast<double>(T), g) / ((2.0 / (g + 1.0)) * (2.0 + 1.4 / rate));
  s.p_ok = p < s.p_limit;
  const double e = 1.0 + 2.0 / k.alpha;
  const double lg = std::log(static_cast<double>(n) * p * T);
  s.a_min = std::sqrt(2.0 * std::pow(1.0 + k.xi, e) * k.tau * k.tau * std::pow(lg, e) / T);
  s.a_ok = a >= s.a_min;
  return s;
}

double gram_deviation(const Matrix& gamma_T, const Matrix& gamma) {
  require(gamma_T.rows() == gamma.rows() && gamma_T.cols() == gamma.cols(), "gram_deviation: shape mismatch");
  return (gamma_T - gamma).cwiseAbs().maxCoeff();
}

GramReport gram_concentration_check(const GramCache& gram, const Matrix& gamma, double a, int n, int p,
                                    const GramConstants& k) {
  require(a >= 0.0, "gram_concentration_check: a must be >= 0");
  GramReport r;
  r.deviation = gram_deviation(gram.G, gamma);
  r.a = a;
  r.exceeds = r.deviation > a;
  r.constants = k;
  r.pi2 = a > 0.0 ? pi2(a, n, p, gram.T_eff, k) : std::numeric_limits<double>::infinity();
  r.side = gram_side_conditions(a, n, p, gram.T_eff, k);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gamma, Eigen::EigenvaluesOnly);
  r.gamma_min_eigenvalue = es.eigenvalues().minCoeff();
  return r;
}

void to_json(nlohmann::json& j, const GramConstants& k) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf"); };
  j = {{"b1", k.b1},     {"b8", k.b8},         {"c_phi", k.c_phi}, {"gamma1", k.gamma1}, {"a2", num(k.a2)},
       {"gamma2", k.gamma2}, {"xi", k.xi}, {"tau", k.tau},     {"alpha", k.alpha}};
}

void to_json(nlohmann::json& j, const GramReport& r) {
  j = {{"deviation_max", r.deviation},
       {"a", r.a},
       {"exceeds", r.exceeds},
       {"pi2", r.pi2},
       {"side_conditions",
        {{"p_limit", r.side.p_limit}, {"p_ok", r.side.p_ok}, {"a_min", r.side.a_min}, {"a_ok", r.side.a_ok}}},
       {"in_regime", r.side.in_regime()},
       {"gamma_min_eigenvalue", r.gamma_min_eigenvalue},
       {"constants", r.constants}};
}

}  // namespace hdvar
