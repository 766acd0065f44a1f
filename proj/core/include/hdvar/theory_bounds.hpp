#pragma once

#include <hdvar/common.hpp>
#include <hdvar/dgp.hpp>
#include <hdvar/lasso.hpp>
#include <hdvar/var_model.hpp>

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hdvar {

// ---------------------------------------------------------------------------
// Deviation bound event D_i(lambda) = { lambda >= 2 |X'U_i / T_eff|_inf }.

struct DeviationBoundReport {
  std::vector<double> statistic;  // 2 |X'U_i / T_eff|_inf per equation
  double lambda = 0.0;
  std::vector<char> holds;
  bool joint = false;

  double max_statistic() const;
};

/// U = Y - X B* - 1 mu' with B* and mu from the true spec.
Matrix true_innovations(const DesignMatrices& design, const VarSpec& truth);

DeviationBoundReport deviation_bound_check(const DesignMatrices& design, const VarSpec& truth, double lambda);

/// 10 exp(-eps).
double pi1(double epsilon);

// ---------------------------------------------------------------------------
// Gram matrix and its concentration.

/// np x np block-Toeplitz matrix of autocovariances. Block (a, b) for lags
/// a, b = 1..p is E[y_{t-a} y'_{t-b}] = Gamma_y(b - a), where
/// Gamma_y(s) = sum_{j>=0} Phi_{j+s} Sigma Phi_j'. The series is truncated once
/// every increment's max-norm drops below tol; NumericalError after max_terms.
Matrix population_gram(const VarSpec& spec, const Matrix& sigma, int p, double tol = 1e-12, int max_terms = 100000);

/// Constants of the Gram concentration bound. All are existential in the
/// theory and enter here as explicit inputs.
struct GramConstants {
  double b1 = 1.0;
  double b8 = 1.0;
  double c_phi = 0.0;
  double gamma1 = 1.0;
  double a2 = 0.0;
  double gamma2 = 1.0;
  double xi = 1.0;
  double tau = 1.0;
  double alpha = 2.0;
};

/// a2 for the conditional-covariance decay of the innovation law:
/// -log(||Psi||_1 ||Psi||_inf) for the stochastic covariance recursion
/// (E[H_t | F_{t-m}] - Sigma shrinks by Psi^m ... Psi'^m), +inf for i.i.d. noise.
double innovation_a2(const InnovationSpec& innov);

/// Default constants: c_phi from the VMA tail-sum fit, a2 and gamma2 = 1 from
/// the innovation law, b1 = b8 = 1, xi = 1, tau = 1, alpha = 2.
GramConstants default_gram_constants(const VarSpec& spec, const InnovationSpec& innov);

double pi2(double a, int n, int p, int T, const GramConstants& k);

struct GramSideConditions {
  double p_limit = 0.0;  // T^g / ((2/(g+1)) (2 + 1.4 / min(2 gamma1 c_phi, a2))), g = min(gamma1, gamma2)
  bool p_ok = false;
  double a_min = 0.0;  // sqrt(2 (1+xi)^{1+2/alpha} tau^2 log(npT)^{1+2/alpha} / T)
  bool a_ok = false;

  bool in_regime() const { return p_ok && a_ok; }
};

GramSideConditions gram_side_conditions(double a, int n, int p, int T, const GramConstants& k);

struct GramReport {
  double deviation = 0.0;  // ||Gamma_T - Gamma||_max
  double a = 0.0;
  bool exceeds = false;  // deviation > a, i.e. B(a) fails
  double pi2 = 0.0;
  GramSideConditions side;
  double gamma_min_eigenvalue = 0.0;
  GramConstants constants;
};

double gram_deviation(const Matrix& gamma_T, const Matrix& gamma);

GramReport gram_concentration_check(const GramCache& gram, const Matrix& gamma, double a, int n, int p,
                                    const GramConstants& k);

// ---------------------------------------------------------------------------
// Restricted strong convexity.

struct RscReport {
  double threshold = 0.0;  // sigma^2 eta^q / (64 R_q)
  std::optional<double> deviation;  // ||Gamma_T - Gamma||_max when Gamma was supplied
  bool hypothesis_holds = false;
  int samples = 0;
  int degenerate = 0;         // zero directions (cone reduced to {0})
  int cone_failures = 0;      // sampled directions failing the membership certificate
  int violations = 0;         // directions with negative slack
  double min_slack = 0.0;     // min of D'G D - (s/2)|D|^2 + (s/2) R_q eta^{2-q}
  double min_ratio = 0.0;     // min of (D'G D + (s/2) R_q eta^{2-q}) / ((s/2)|D|^2)
  std::vector<int> support;   // S = {j : |beta*_j| > eta}
};

struct RscInputs {
  Vector beta_star;
  double q = 0.0;
  double eta = 0.0;
  double sigma_sq = 0.0;
  double r_q = 0.0;
  std::optional<Vector> error_direction;  // e.g. beta_hat - beta*, used by the third generator
};

/// |D_{S^c}|_1 <= 3 |D_S|_1 + 4 |beta*_{S^c}|_1 (relative slack 1e-12).
bool in_cone(const Vector& delta, const Vector& beta_star, const std::vector<int>& support);

/// Samples cone directions from three generators with equal weight: sparse on
/// S, dense off S, and error-shaped (the supplied error direction, or the
/// l1/l2-maximizing corner of the cone), each at log-uniform scale.
RscReport rsc_check(const Matrix& gamma_T, const RscInputs& in, int samples, std::uint64_t seed,
                    const Matrix* gamma = nullptr);

// ---------------------------------------------------------------------------
// Closed-form bounds.

/// (44 + 2 lambda) R_q (lambda / sigma^2)^{2-q}.
double l2_error_bound(double lambda, double r_q, double q, double sigma_sq);

/// 12 |beta*|_1 lambda.
double prediction_error_bound(double lambda, double beta_star_l1);

/// 2n exp(-T x^2 / (2M^2 + xM)) + 8nT exp(-(M/tau)^alpha).
double martingale_tail_bound(int n, int T, double x, double M, double alpha, double tau);

/// Minimum of martingale_tail_bound over M > 0 (golden section in log M).
struct MartingaleBound {
  double value = 0.0;
  double M = 0.0;
};
MartingaleBound martingale_tail_bound_best(int n, int T, double x, double alpha, double tau);

struct MartingaleCorollary {
  bool premises_hold = false;
  double x_threshold = 0.0;  // tau (eps + log(nT))^{1/alpha} sqrt(eps + log n) / sqrt(T)
  double bound = 0.0;        // 10 exp(-eps)
  std::string violation;
};
MartingaleCorollary martingale_corollary(int n, int T, double x, double epsilon, double alpha, double tau);

/// sum_{i>=n} sum_{j>=0} exp(-b i^a - b (i+j)^a) <= (2 + 1/a) n^2 exp(-2 b n^a).
double weibull_double_sum_bound(double a, double b, int n);
/// sum_{i>=n} exp(-b i^a) <= 2 n exp(-b n^a).
double weibull_single_sum_bound(double a, double b, int n);
/// Exact sums evaluated term by term until the remaining tail is below
/// 1e-16 of the partial sum (the tail is bounded by an integral).
double weibull_single_sum_exact(double a, double b, int n);
double weibull_double_sum_exact(double a, double b, int n);

/// Sandwich M^p e^{-cM^alpha} <= E[X^p 1{X >= M}] <= (1 + p/alpha) M^p e^{-cM^alpha}
/// for X with P(X >= u) = exp(-c u^alpha).
struct TruncatedMoment {
  double lower = 0.0;
  double exact = 0.0;  // adaptive quadrature
  double upper = 0.0;

  bool lower_holds() const { return lower <= exact; }
  bool upper_holds() const { return exact <= upper; }
};
TruncatedMoment truncated_moment(double p, double alpha, double c, double M);

void to_json(nlohmann::json& j, const DeviationBoundReport& r);
void to_json(nlohmann::json& j, const GramConstants& k);
void to_json(nlohmann::json& j, const GramReport& r);
void to_json(nlohmann::json& j, const RscReport& r);

}  // namespace hdvar
