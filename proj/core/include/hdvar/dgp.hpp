#pragma once

#include <hdvar/common.hpp>
#include <hdvar/rng.hpp>
#include <hdvar/var_model.hpp>

#include <functional>
#include <optional>
#include <string>
#include <variant>

namespace hdvar {

/// Draws one n-vector of a zero-mean, identity-covariance law into `out`.
/// The default (empty) law is standard Gaussian.
using ShockLaw = std::function<void(Rng&, Vector& out)>;

struct GaussianIid {
  Matrix sigma;
};

/// u_t = H_t^{1/2} v_t, H_{t+1} = C0 + Psi H_t Psi' + eps_t eps_t'.
struct StochasticCovariance {
  Matrix c0;
  Matrix psi;
  ShockLaw eps_law;  // empty: N(0, I)
  ShockLaw v_law;    // empty: N(0, I)
};

/// Tagged innovation process. Construct through the factories, which
/// validate the invariants (Sigma / C0 positive definite, ||Psi||_1 ||Psi||_inf < 1).
class InnovationSpec {
 public:
  static InnovationSpec gaussian(Matrix sigma);
  static InnovationSpec stochastic_covariance(Matrix c0, Matrix psi, ShockLaw eps_law = {}, ShockLaw v_law = {});

  int n() const;
  bool is_gaussian() const { return std::holds_alternative<GaussianIid>(kind_); }
  const GaussianIid& as_gaussian() const { return std::get<GaussianIid>(kind_); }
  const StochasticCovariance& as_stochastic() const { return std::get<StochasticCovariance>(kind_); }
  std::string kind_name() const { return is_gaussian() ? "gaussian_iid" : "stochastic_covariance"; }

 private:
  explicit InnovationSpec(std::variant<GaussianIid, StochasticCovariance> kind) : kind_(std::move(kind)) {}
  std::variant<GaussianIid, StochasticCovariance> kind_;
};

/// ||Psi||_1 * ||Psi||_inf (max column sum times max row sum).
double psi_contraction(const Matrix& psi);

/// Sigma = E[u_t u_t']. Gaussian: the given Sigma. Stochastic covariance:
/// sum_j Psi^j (C0 + I) Psi'^j, truncated once the increment's Frobenius norm
/// drops below tol. Throws NumericalError if the series fails to converge.
Matrix stationary_innovation_covariance(const InnovationSpec& innov, double tol = 1e-12);

struct CovarianceStep {
  Vector u;       // H_t^{1/2} v_t with the lower Cholesky factor
  Matrix h_next;  // C0 + Psi H_t Psi' + eps eps'
};

/// One step of the stochastic-covariance recursion given explicit draws.
/// Throws NumericalError if H_t is not positive definite.
CovarianceStep step_stochastic_covariance(const Matrix& h, const Matrix& c0, const Matrix& psi, const Vector& v,
                                          const Vector& eps);

/// Stateful sampler of the stochastic-covariance innovation process.
/// Holds its own two streams (v and epsilon); confined to one thread.
class StochasticCovarianceSampler {
 public:
  StochasticCovarianceSampler(const InnovationSpec& innov, std::uint64_t seed, std::optional<Matrix> h0 = {});

  /// Returns u_t and advances H_t -> H_{t+1}.
  const Vector& next();
  const Matrix& state() const { return h_; }

 private:
  StochasticCovariance model_;
  bool psi_diagonal_ = false;
  Vector psi_diag_;
  Matrix h_;
  Eigen::LLT<Matrix> llt_;
  Vector v_;
  Vector eps_;
  Vector u_;
  Rng v_rng_;
  Rng eps_rng_;
  std::normal_distribution<double> v_normal_;
  std::normal_distribution<double> eps_normal_;
  long step_ = 0;
};

/// A T x n panel of observations; row t is y_t.
struct TimeSeriesPanel {
  Matrix data;
  std::uint64_t seed = 0;
  int burn_in = 0;
  std::uint64_t dgp_fingerprint = 0;

  int T() const { return static_cast<int>(data.rows()); }
  int n() const { return static_cast<int>(data.cols()); }
};

std::uint64_t dgp_fingerprint(const VarSpec& spec, const InnovationSpec& innov);

/// 200 + 10 p.
int default_burn_in(int p);

/// Iterates the VAR from zero initial conditions, discards burn_in rows and
/// returns T rows. Bit-reproducible for a fixed seed. Rejects unstable specs
/// (ValidationError) and aborts on overflow with the offending t (NumericalError).
TimeSeriesPanel simulate(const VarSpec& spec, const InnovationSpec& innov, int T, int burn_in, std::uint64_t seed);

/// Block-diagonal design of the Monte Carlo study. The defaults reproduce the
/// published configuration; the lag of the second block is configurable so the
/// same construction yields small VAR(2) desk designs.
struct SimulationDesign {
  int block_size = 5;
  double a1_entry = 0.15;
  double second_entry = -0.1;
  int second_lag = 4;
  double c0_diag = 1e-5;
  double psi_diag = 0.8;
};

struct DesignPair {
  VarSpec spec;
  InnovationSpec innov;
};

/// n-dimensional block design; n must be divisible by the block size.
DesignPair build_block_design(int n, const SimulationDesign& design = {});

/// n = c T, A_1 and A_4 block diagonal, A_2 = A_3 = 0, zero intercept,
/// C0 = 1e-5 I, Psi = 0.8 I, Gaussian epsilon and v.
DesignPair build_table1_design(int T, int c);

}  // namespace hdvar
