#pragma once

#include <hdvar/common.hpp>

#include <nlohmann/json_fwd.hpp>

#include <vector>

namespace hdvar {

/// Population VAR(p): y_t = intercept + A_1 y_{t-1} + ... + A_p y_{t-p} + u_t.
/// Immutable once constructed; the constructor validates shapes and finiteness.
class VarSpec {
 public:
  explicit VarSpec(std::vector<Matrix> coeffs, Vector intercept = Vector());

  int n() const { return static_cast<int>(coeffs_.front().rows()); }
  int p() const { return static_cast<int>(coeffs_.size()); }

  /// Lag matrix A_lag, 1-based.
  const Matrix& lag(int lag) const { return coeffs_.at(static_cast<std::size_t>(lag - 1)); }
  const std::vector<Matrix>& coeffs() const { return coeffs_; }
  const Vector& intercept() const { return intercept_; }

  /// Stacked np x n coefficient matrix. Column i is the true beta_i of
  /// equation i in the lag-major regressor layout (lag 1 series 1..n, lag 2, ...).
  Matrix stacked() const;

  /// Inverse of stacked().
  static VarSpec from_stacked(const Matrix& beta, int n, int p);

 private:
  std::vector<Matrix> coeffs_;
  Vector intercept_;
};

void to_json(nlohmann::json& j, const VarSpec& spec);
VarSpec var_spec_from_json(const nlohmann::json& j);

/// np x np first-order embedding. Top block row [A_1 ... A_p], identity
/// blocks on the subdiagonal, zeros elsewhere.
struct CompanionMatrix {
  int n = 0;
  int p = 0;
  Matrix data;
};

CompanionMatrix build_companion(const VarSpec& spec);

struct StabilityReport {
  bool stable = false;
  double spectral_radius = 0.0;
};

/// Stable iff the companion spectral radius is below 1 - margin.
/// Throws NumericalError if the eigensolver does not converge.
StabilityReport is_stable(const VarSpec& spec, double margin = 1e-6);

/// Phi_0 .. Phi_K of the moving-average representation.
struct VmaCoefficients {
  std::vector<Matrix> phis;

  int horizon() const { return static_cast<int>(phis.size()) - 1; }
  int n() const { return phis.empty() ? 0 : static_cast<int>(phis.front().rows()); }
  /// Row i of Phi_k (phi_{k,i}).
  Eigen::RowVectorXd row(int k, int i) const { return phis.at(static_cast<std::size_t>(k)).row(i); }
};

/// Phi_k = sum_{j=1}^{min(p,k)} Phi_{k-j} A_j with Phi_0 = I. Rejects K < 0.
VmaCoefficients vma_coefficients(const VarSpec& spec, int horizon);

/// Smallest K with rho^K < 1e-12, capped at 500.
int default_vma_horizon(const VarSpec& spec);

/// Per-row sums sum_{k=m}^{K} |phi_{k,i}|_1. Requires 0 <= m <= K.
std::vector<double> tail_sum_profile(const VmaCoefficients& vma, int m);

/// Log-linear envelope c_bar * exp(-c_phi * m) for the worst row's tail
/// sums, gamma_1 fixed at 1. Fitted by least squares on log tail sums over
/// m in [m_min, m_max], then c_bar raised so the envelope dominates every
/// fitted point.
struct TailSumFit {
  double c_bar = 0.0;
  double c_phi = 0.0;
  double gamma1 = 1.0;
  int m_min = 0;
  int m_max = 0;
};

TailSumFit fit_tail_sum(const VmaCoefficients& vma, int m_min, int m_max);

struct EigenBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Spectral sandwich for the population Gram matrix:
/// lambda_min(Sigma) / max_z lambda_max(A*(z)A(z)) and
/// lambda_max(Sigma) / min_z lambda_min(A*(z)A(z)), |z| = 1 on a uniform grid.
EigenBounds gram_eigen_bounds(const VarSpec& spec, const Matrix& sigma, int grid_points = 512);

/// Weak-sparsity summary of per-equation coefficient vectors (columns of beta).
struct SparsityProfile {
  double q = 0.0;
  double eta = 0.0;
  std::vector<double> rq;                    // per equation sum_j |beta_ij|^q, 0^0 := 0
  std::vector<std::vector<int>> active_sets;  // {j : |beta_ij| > eta}, 0-based

  double r_q() const;
};

SparsityProfile sparsity_profile(const Matrix& beta, double q, double eta);

}  // namespace hdvar
