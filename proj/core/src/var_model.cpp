#include <hdvar/var_model.hpp>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <numeric>

namespace hdvar {

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

VarSpec::VarSpec(std::vector<Matrix> coeffs, Vector intercept)
    : coeffs_(std::move(coeffs)), intercept_(std::move(intercept)) {
  require(!coeffs_.empty(), "VarSpec: p must be >= 1");
  const Index n = coeffs_.front().rows();
  require(n >= 1, "VarSpec: n must be >= 1");
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    const auto& a = coeffs_[k];
    require(a.rows() == n && a.cols() == n,
            "VarSpec: lag " + std::to_string(k + 1) + " matrix is not " + std::to_string(n) + "x" +
                std::to_string(n));
    require(a.allFinite(), "VarSpec: lag " + std::to_string(k + 1) + " matrix has non-finite entries");
  }
  if (intercept_.size() == 0) intercept_ = Vector::Zero(n);
  require(intercept_.size() == n, "VarSpec: intercept length must equal n");
  require(intercept_.allFinite(), "VarSpec: intercept has non-finite entries");
}

Matrix VarSpec::stacked() const {
  const int nn = n();
  Matrix beta(static_cast<Index>(nn) * p(), nn);
  for (int k = 0; k < p(); ++k) beta.middleRows(static_cast<Index>(k) * nn, nn) = coeffs_[k].transpose();
  return beta;
}

VarSpec VarSpec::from_stacked(const Matrix& beta, int n, int p) {
  require(beta.rows() == static_cast<Index>(n) * p && beta.cols() == n,
          "from_stacked: beta must be np x n");
  std::vector<Matrix> coeffs;
  coeffs.reserve(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) coeffs.emplace_back(beta.middleRows(static_cast<Index>(k) * n, n).transpose());
  return VarSpec(std::move(coeffs));
}

void to_json(nlohmann::json& j, const VarSpec& spec) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& a : spec.coeffs()) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < a.rows(); ++i) {
      std::vector<double> row(a.cols());
      for (Index c = 0; c < a.cols(); ++c) row[static_cast<std::size_t>(c)] = a(i, c);
      rows.push_back(row);
    }
    coeffs.push_back(std::move(rows));
  }
  std::vector<double> icpt(spec.intercept().data(), spec.intercept().data() + spec.intercept().size());
  j = nlohmann::json{{"n", spec.n()}, {"p", spec.p()}, {"coeffs", std::move(coeffs)}, {"intercept", icpt}};
}

VarSpec var_spec_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("n").get<int>();
    const int p = j.at("p").get<int>();
    require(n >= 1 && p >= 1, "spec JSON: n and p must be positive");
    const auto& coeffs = j.at("coeffs");
    require(coeffs.is_array() && static_cast<int>(coeffs.size()) == p, "spec JSON: coeffs must hold p matrices");
    std::vector<Matrix> mats;
    for (const auto& m : coeffs) {
      require(m.is_array() && static_cast<int>(m.size()) == n, "spec JSON: each matrix must have n rows");
      Matrix a(n, n);
      for (int r = 0; r < n; ++r) {
        const auto& row = m[static_cast<std::size_t>(r)];
        require(row.is_array() && static_cast<int>(row.size()) == n, "spec JSON: each row must have n entries");
        for (int c = 0; c < n; ++c) a(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
      mats.push_back(std::move(a));
    }
    Vector intercept = Vector::Zero(n);
    if (j.contains("intercept")) {
      const auto v = j.at("intercept").get<std::vector<double>>();
      require(static_cast<int>(v.size()) == n, "spec JSON: intercept must have n entries");
      intercept = Eigen::Map<const Vector>(v.data(), n);
    }
    return VarSpec(std::move(mats), std::move(intercept));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("spec JSON: ") + e.what());
  }
}

CompanionMatrix build_companion(const VarSpec& spec) {
  const int n = spec.n();
  const int p = spec.p();
  const Index dim = static_cast<Index>(n) * p;
  CompanionMatrix f{n, p, Matrix::Zero(dim, dim)};
  for (int k = 0; k < p; ++k) f.data.block(0, static_cast<Index>(k) * n, n, n) = spec.lag(k + 1);
  for (int k = 1; k < p; ++k)
    f.data.block(static_cast<Index>(k) * n, static_cast<Index>(k - 1) * n, n, n).setIdentity();
  return f;
}

namespace {

double dense_spectral_radius(const VarSpec& spec) {
  const auto f = build_companion(spec);
  Eigen::EigenSolver<Matrix> es(f.data, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalError("is_stable: eigensolver failed on the " + std::to_string(f.data.rows()) +
                         "x" + std::to_string(f.data.cols()) + " companion matrix");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Connected components of the graph linking series i and j whenever some lag
// couples them. Permuting series into components makes every A_k block
// diagonal, so the companion spectrum is the union of the component spectra.
std::vector<std::vector<int>> coupling_components(const VarSpec& spec) {
  const int n = spec.n();
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& a : spec.coeffs())
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (i != j && a(i, j) != 0.0) parent[find(i)] = find(j);
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& g : groups)
    if (!g.empty()) out.push_back(std::move(g));
  return out;
}

double companion_spectral_radius(const VarSpec& spec) {
  const auto comps = coupling_components(spec);
  if (comps.size() <= 1) return dense_spectral_radius(spec);
  double rho = 0.0;
  for (const auto& c : comps) {
    const auto m = static_cast<Index>(c.size());
    std::vector<Matrix> sub;
    for (const auto& a : spec.coeffs()) {
      Matrix b(m, m);
      for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < m; ++i) b(i, j) = a(c[i], c[j]);
      sub.push_back(std::move(b));
    }
    rho = std::max(rho, dense_spectral_radius(VarSpec(std::move(sub))));
  }
  return rho;
}

}  // namespace

StabilityReport is_stable(const VarSpec& spec, double margin) {
  require(margin >= 0.0, "is_stable: margin must be >= 0");
  const double rho = companion_spectral_radius(spec);
  return {rho < 1.0 - margin, rho};
}

VmaCoefficients vma_coefficients(const VarSpec& spec, int horizon) {
  require(horizon >= 0, "vma_coefficients: horizon K must be >= 0");
  const int n = spec.n();
  const int p = spec.p();
  VmaCoefficients out;
  out.phis.reserve(static_cast<std::size_t>(horizon) + 1);
  out.phis.push_back(Matrix::Identity(n, n));
  for (int k = 1; k <= horizon; ++k) {
    Matrix phi = Matrix::Zero(n, n);
    for (int j = 1; j <= std::min(p, k); ++j) phi.noalias() += out.phis[static_cast<std::size_t>(k - j)] * spec.lag(j);
    out.phis.push_back(std::move(phi));
  }
  return out;
}

int default_vma_horizon(const VarSpec& spec) {
  constexpr int kCap = 500;
  const double rho = companion_spectral_radius(spec);
  if (rho <= 0.0) return spec.p();
  if (rho >= 1.0) return kCap;
  const double k = std::ceil(std::log(1e-12) / std::log(rho));
  return static_cast<int>(std::clamp(k, 1.0, static_cast<double>(kCap)));
}

std::vector<double> tail_sum_profile(const VmaCoefficients& vma, int m) {
  require(m >= 0 && m <= vma.horizon(), "tail_sum_profile: need 0 <= m <= K");
  std::vector<double> sums(static_cast<std::size_t>(vma.n()), 0.0);
  for (int k = vma.horizon(); k >= m; --k) {
    const Matrix& phi = vma.phis[static_cast<std::size_t>(k)];
    for (int i = 0; i < vma.n(); ++i) sums[static_cast<std::size_t>(i)] += phi.row(i).cwiseAbs().sum();
  }
  return sums;
}

TailSumFit fit_tail_sum(const VmaCoefficients& vma, int m_min, int m_max) {
  require(0 <= m_min && m_min < m_max && m_max <= vma.horizon(), "fit_tail_sum: need 0 <= m_min < m_max <= K");
  std::vector<double> ms;
  std::vector<double> logs;
  for (int m = m_min; m <= m_max; ++m) {
    const auto sums = tail_sum_profile(vma, m);
    const double worst = *std::max_element(sums.begin(), sums.end());
    if (worst <= 0.0) break;
    ms.push_back(m);
    logs.push_back(std::log(worst));
  }
  TailSumFit fit;
  fit.m_min = m_min;
  fit.m_max = m_max;
  if (ms.size() < 2) {
    // Tail vanishes identically (e.g. finite VMA); any positive decay works.
    fit.c_phi = 1.0;
    fit.c_bar = ms.empty() ? 0.0 : std::exp(logs.front() + fit.c_phi * ms.front());
    return fit;
  }
  const double mean_m = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  const double mean_l = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(logs.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    sxy += (ms[i] - mean_m) * (logs[i] - mean_l);
    sxx += (ms[i] - mean_m) * (ms[i] - mean_m);
  }
  fit.c_phi = std::max(-sxy / sxx, 1e-12);
  double log_cbar = mean_l + fit.c_phi * mean_m;
  for (std::size_t i = 0; i < ms.size(); ++i) log_cbar = std::max(log_cbar, logs[i] + fit.c_phi * ms[i]);
  fit.c_bar = std::exp(log_cbar);
  return fit;
}

EigenBounds gram_eigen_bounds(const VarSpec& spec, const Matrix& sigma, int grid_points) {
  const int n = spec.n();
  require(grid_points >= 2, "gram_eigen_bounds: grid needs at least 2 points");
  require(sigma.rows() == n && sigma.cols() == n, "gram_eigen_bounds: sigma must be n x n");
  require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, sigma.cwiseAbs().maxCoeff()),
          "gram_eigen_bounds: sigma must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> sig_es(sigma, Eigen::EigenvaluesOnly);
  const double sig_min = sig_es.eigenvalues().minCoeff();
  const double sig_max = sig_es.eigenvalues().maxCoeff();
  require(sig_min > 0.0, "gram_eigen_bounds: sigma must be positive definite");

  using Cplx = std::complex<double>;
  double max_of_max = 0.0;
  double min_of_min = std::numeric_limits<double>::infinity();
  Eigen::MatrixXcd poly(n, n);
  for (int g = 0; g < grid_points; ++g) {
    const double theta = 2.0 * std::numbers::pi * g / grid_points;
    const Cplx z = std::polar(1.0, theta);
    poly.setIdentity();
    Cplx zk = 1.0;
    for (int k = 1; k <= spec.p(); ++k) {
      zk *= z;
      poly -= zk * spec.lag(k).cast<Cplx>();
    }
    const Eigen::MatrixXcd herm = poly.adjoint() * poly;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("gram_eigen_bounds: eigensolver failed");
    max_of_max = std::max(max_of_max, es.eigenvalues().maxCoeff());
    min_of_min = std::min(min_of_min, es.eigenvalues().minCoeff());
  }
  if (!(min_of_min > 0.0))
    throw NumericalError("gram_eigen_bounds: reverse characteristic polynomial is singular on the unit circle");
  return {sig_min / max_of_max, sig_max / min_of_min};
}

double SparsityProfile::r_q() const { return rq.empty() ? 0.0 : *std::max_element(rq.begin(), rq.end()); }

SparsityProfile sparsity_profile(const Matrix& beta, double q, double eta) {
  require(q >= 0.0 && q < 1.0, "sparsity_profile: q must lie in [0, 1)");
  require(eta >= 0.0, "sparsity_profile: eta must be >= 0");
  SparsityProfile out;
  out.q = q;
  out.eta = eta;
  for (Index i = 0; i < beta.cols(); ++i) {
    double sum = 0.0;
    std::vector<int> active;
    for (Index j = 0; j < beta.rows(); ++j) {
      const double a = std::abs(beta(j, i));
      if (a > 0.0) sum += (q == 0.0) ? 1.0 : std::pow(a, q);
      if (a > eta) active.push_back(static_cast<int>(j));
    }
    out.rq.push_back(sum);
    out.active_sets.push_back(std::move(active));
  }
  return out;
}

}  // namespace hdvar
