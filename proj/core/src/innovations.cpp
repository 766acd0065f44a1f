#include <hdvar/dgp.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>

namespace hdvar {

namespace {

bool is_symmetric(const Matrix& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

bool is_positive_definite(const Matrix& m) {
  if (!is_symmetric(m)) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

bool is_diagonal(const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

void draw(const ShockLaw& law, Rng& rng, std::normal_distribution<double>& normal, Vector& out) {
  if (law) {
    law(rng, out);
  } else {
    for (Index i = 0; i < out.size(); ++i) out[i] = normal(rng);
  }
}

}  // namespace

InnovationSpec InnovationSpec::gaussian(Matrix sigma) {
  require(sigma.rows() >= 1 && sigma.rows() == sigma.cols(), "GaussianIid: Sigma must be square");
  require(sigma.allFinite(), "GaussianIid: Sigma has non-finite entries");
  require(is_positive_definite(sigma), "GaussianIid: Sigma must be symmetric positive definite");
  return InnovationSpec(GaussianIid{std::move(sigma)});
}

InnovationSpec InnovationSpec::stochastic_covariance(Matrix c0, Matrix psi, ShockLaw eps_law, ShockLaw v_law) {
  require(c0.rows() >= 1 && c0.rows() == c0.cols(), "StochasticCovariance: C0 must be square");
  require(psi.rows() == c0.rows() && psi.cols() == c0.cols(), "StochasticCovariance: Psi must match C0");
  require(c0.allFinite() && psi.allFinite(), "StochasticCovariance: non-finite entries");
  require(is_positive_definite(c0), "StochasticCovariance: C0 must be symmetric positive definite");
  const double contraction = psi_contraction(psi);
  require(contraction < 1.0, "StochasticCovariance: stationarity requires ||Psi||_1 ||Psi||_inf < 1, got " +
                                 std::to_string(contraction));
  return InnovationSpec(StochasticCovariance{std::move(c0), std::move(psi), std::move(eps_law), std::move(v_law)});
}

int InnovationSpec::n() const {
  return static_cast<int>(is_gaussian() ? as_gaussian().sigma.rows() : as_stochastic().c0.rows());
}

double psi_contraction(const Matrix& psi) {
  const double norm1 = psi.cwiseAbs().colwise().sum().maxCoeff();
  const double norm_inf = psi.cwiseAbs().rowwise().sum().maxCoeff();
  return norm1 * norm_inf;
}

Matrix stationary_innovation_covariance(const InnovationSpec& innov, double tol) {
  require(tol > 0.0, "stationary_innovation_covariance: tol must be positive");
  if (innov.is_gaussian()) return innov.as_gaussian().sigma;
  const auto& sc = innov.as_stochastic();
  require(psi_contraction(sc.psi) < 1.0, "stationary_innovation_covariance: stationarity condition violated");
  const Index n = sc.c0.rows();
  Matrix term = sc.c0 + Matrix::Identity(n, n);
  Matrix sigma = term;
  constexpr int kMaxTerms = 100000;
  for (int j = 1; j <= kMaxTerms; ++j) {
    term = sc.psi * term * sc.psi.transpose();
    sigma += term;
    const double inc = term.norm();
    if (!std::isfinite(inc)) break;
    if (inc < tol) return 0.5 * (sigma + sigma.transpose());
  }
  throw NumericalError("stationary_innovation_covariance: series did not converge within " +
                       std::to_string(kMaxTerms) + " terms");
}

CovarianceStep step_stochastic_covariance(const Matrix& h, const Matrix& c0, const Matrix& psi, const Vector& v,
                                          const Vector& eps) {
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success)
    throw NumericalError("step_stochastic_covariance: Cholesky of H_t failed (H_t not positive definite)");
  CovarianceStep out;
  out.u = llt.matrixL() * v;
  out.h_next = c0 + psi * h * psi.transpose() + eps * eps.transpose();
  return out;
}

StochasticCovarianceSampler::StochasticCovarianceSampler(const InnovationSpec& innov, std::uint64_t seed,
                                                         std::optional<Matrix> h0)
    : model_(innov.as_stochastic()),
      v_rng_(make_stream(seed, Stream::kShocks)),
      eps_rng_(make_stream(seed, Stream::kVolatility)) {
  const Index n = model_.c0.rows();
  psi_diagonal_ = is_diagonal(model_.psi);
  psi_diag_ = model_.psi.diagonal();
  h_ = h0 ? std::move(*h0) : stationary_innovation_covariance(innov);
  require(h_.rows() == n && h_.cols() == n, "StochasticCovarianceSampler: H0 must be n x n");
  v_.resize(n);
  eps_.resize(n);
  u_.resize(n);
}

const Vector& StochasticCovarianceSampler::next() {
  llt_.compute(h_);
  if (llt_.info() != Eigen::Success)
    throw NumericalError("stochastic covariance: H_t lost positive definiteness at step " + std::to_string(step_));
  draw(model_.v_law, v_rng_, v_normal_, v_);
  draw(model_.eps_law, eps_rng_, eps_normal_, eps_);
  u_.noalias() = llt_.matrixL() * v_;
  if (psi_diagonal_) {
    h_.array() *= (psi_diag_ * psi_diag_.transpose()).array();
  } else {
    h_ = model_.psi * h_ * model_.psi.transpose();
  }
  h_ += model_.c0;
  h_.noalias() += eps_ * eps_.transpose();
  ++step_;
  return u_;
}

}  // namespace hdvar
