#include <hdvar/dgp.hpp>

#include <cmath>
#include <optional>

namespace hdvar {

namespace {

constexpr double kOverflowLimit = 1e150;

}  // namespace

std::uint64_t dgp_fingerprint(const VarSpec& spec, const InnovationSpec& innov) {
  Fnv1a h;
  h.update(std::string("var"));
  h.update(static_cast<std::int64_t>(spec.n()));
  h.update(static_cast<std::int64_t>(spec.p()));
  for (const auto& a : spec.coeffs()) h.update(a);
  h.update(Matrix(spec.intercept()));
  h.update(innov.kind_name());
  if (innov.is_gaussian()) {
    h.update(innov.as_gaussian().sigma);
  } else {
    const auto& sc = innov.as_stochastic();
    h.update(sc.c0);
    h.update(sc.psi);
    // Custom laws cannot be hashed; mark their presence so they never
    // collide with the Gaussian default.
    h.update(static_cast<std::int64_t>(static_cast<bool>(sc.eps_law)));
    h.update(static_cast<std::int64_t>(static_cast<bool>(sc.v_law)));
  }
  return h.digest();
}

int default_burn_in(int p) { return 200 + 10 * p; }

TimeSeriesPanel simulate(const VarSpec& spec, const InnovationSpec& innov, int T, int burn_in, std::uint64_t seed) {
  require(T >= 1, "simulate: T must be >= 1");
  require(burn_in >= 0, "simulate: burn_in must be >= 0");
  require(innov.n() == spec.n(), "simulate: innovation dimension " + std::to_string(innov.n()) +
                                     " does not match VAR dimension " + std::to_string(spec.n()));
  const auto stability = is_stable(spec);
  require(stability.stable, "simulate: VAR is not stable (A1 violated): companion spectral radius " +
                                std::to_string(stability.spectral_radius) + " >= 1");

  const int n = spec.n();
  const int p = spec.p();
  const int total = T + burn_in;

  // Ring of the last p states; slot (t mod p) holds y_t.
  Matrix hist = Matrix::Zero(n, p);
  Matrix out(T, n);
  Vector y(n);

  std::optional<StochasticCovarianceSampler> sampler;
  Matrix chol;
  Rng shock_rng;
  std::normal_distribution<double> normal;
  Vector z(n);
  if (innov.is_gaussian()) {
    Eigen::LLT<Matrix> llt(innov.as_gaussian().sigma);
    if (llt.info() != Eigen::Success) throw NumericalError("simulate: Cholesky of Sigma failed");
    chol = llt.matrixL();
    shock_rng = make_stream(seed, Stream::kShocks);
  } else {
    sampler.emplace(innov, seed);
  }

  // Lags whose matrix is exactly zero are skipped (A_2, A_3 in the block design).
  std::vector<int> live_lags;
  for (int k = 1; k <= p; ++k)
    if (!spec.lag(k).isZero(0.0)) live_lags.push_back(k);

  for (int t = 0; t < total; ++t) {
    if (sampler) {
      y = sampler->next();
    } else {
      for (int i = 0; i < n; ++i) z[i] = normal(shock_rng);
      y.noalias() = chol.triangularView<Eigen::Lower>() * z;
    }
    if (spec.intercept().size() == n) y += spec.intercept();
    for (const int k : live_lags) {
      if (t - k < 0) continue;
      y.noalias() += spec.lag(k) * hist.col((t - k) % p);
    }
    const double mx = y.cwiseAbs().maxCoeff();
    if (!std::isfinite(mx) || mx > kOverflowLimit)
      throw NumericalError("simulate: path diverged at t = " + std::to_string(t - burn_in) +
                           " (|y_t|_inf = " + std::to_string(mx) + ")");
    hist.col(t % p) = y;
    if (t >= burn_in) out.row(t - burn_in) = y.transpose();
  }

  TimeSeriesPanel panel;
  panel.data = std::move(out);
  panel.seed = seed;
  panel.burn_in = burn_in;
  panel.dgp_fingerprint = dgp_fingerprint(spec, innov);
  return panel;
}

DesignPair build_block_design(int n, const SimulationDesign& design) {
  require(design.block_size >= 1, "block design: block_size must be >= 1");
  require(n >= 1 && n % design.block_size == 0,
          "block design: n = " + std::to_string(n) + " is not divisible by block size " +
              std::to_string(design.block_size));
  require(design.second_lag >= 1, "block design: second_lag must be >= 1");
  const int p = std::max(1, design.second_lag);
  std::vector<Matrix> coeffs(static_cast<std::size_t>(p), Matrix::Zero(n, n));
  const int b = design.block_size;
  for (int start = 0; start < n; start += b) {
    coeffs[0].block(start, start, b, b).setConstant(design.a1_entry);
    coeffs[static_cast<std::size_t>(design.second_lag - 1)].block(start, start, b, b).array() +=
        design.second_entry;
  }
  VarSpec spec(std::move(coeffs), Vector::Zero(n));
  auto innov = InnovationSpec::stochastic_covariance(design.c0_diag * Matrix::Identity(n, n),
                                                     design.psi_diag * Matrix::Identity(n, n));
  return DesignPair{std::move(spec), std::move(innov)};
}

DesignPair build_table1_design(int T, int c) {
  require(T >= 1 && c >= 1, "table1 design: T and c must be positive");
  require((static_cast<long>(c) * T) % 5 == 0,
          "table1 design: n = c*T = " + std::to_string(static_cast<long>(c) * T) + " is not divisible by 5");
  return build_block_design(c * T, SimulationDesign{});
}

}  // namespace hdvar
