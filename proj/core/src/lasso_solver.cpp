#include <hdvar/lasso.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace hdvar {

namespace {

constexpr double kPolishThreshold = 1e-4;
constexpr int kMaxPolish = 50;

double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double residual_sum_of_squares(const DesignMatrices& design, int equation, const Vector& beta) {
  Vector r = design.Y.col(equation);
  for (Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) r.noalias() -= beta[j] * design.X.col(j);
  return r.squaredNorm();
}

EquationFit make_fit(const DesignMatrices& design, int equation, const CdSolver& solver, double lambda) {
  EquationFit f;
  f.beta = solver.beta();
  f.lambda = lambda;
  f.iterations = solver.iterations();
  f.kkt_residual = solver.kkt();
  f.converged = solver.converged();
  f.active = solver.support();
  f.rss = residual_sum_of_squares(design, equation, f.beta);
  return f;
}

}  // namespace

double kkt_residual(const Matrix& G, const Vector& c, const Vector& beta, double lambda) {
  const Vector g = c - G * beta;
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    const double two_g = 2.0 * g[j];
    const double v = beta[j] != 0.0 ? std::abs(two_g - lambda * (beta[j] > 0 ? 1.0 : -1.0))
                                    : std::max(0.0, std::abs(two_g) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

CdSolver::CdSolver(const Matrix& G, Vector c, LassoOptions options)
    : G_(G), c_(std::move(c)), opt_(options) {
  require(G_.rows() == G_.cols() && G_.rows() == c_.size(), "CdSolver: Gram and c dimensions disagree");
  require(G_.allFinite() && c_.allFinite(), "CdSolver: NaN in design");
  require(opt_.tol_cd > 0 && opt_.max_iter > 0, "CdSolver: tol_cd and max_iter must be positive");
  beta_ = Vector::Zero(c_.size());
  grad_ = c_;
  in_active_.assign(static_cast<std::size_t>(c_.size()), 0);
}

std::vector<int> CdSolver::support() const {
  std::vector<int> s;
  for (const int j : active_)
    if (beta_[j] != 0.0) s.push_back(j);
  std::sort(s.begin(), s.end());
  return s;
}

double CdSolver::objective(double lambda) const {
  return -2.0 * c_.dot(beta_) + beta_.dot(G_ * beta_) + lambda * beta_.lpNorm<1>();
}

void CdSolver::add_to_active(int j) {
  if (in_active_[static_cast<std::size_t>(j)]) return;
  in_active_[static_cast<std::size_t>(j)] = 1;
  active_.push_back(j);
}

void CdSolver::refresh_gradient() {
  grad_ = c_;
  for (const int j : active_)
    if (beta_[j] != 0.0) grad_.noalias() -= beta_[j] * G_.col(j);
}

bool CdSolver::inner_sweeps(double lambda, double tol, long& budget) {
  const auto a = static_cast<Index>(active_.size());
  if (a == 0) return true;
  if (g_aa_.rows() != a) {
    g_aa_.resize(a, a);
    for (Index k = 0; k < a; ++k)
      for (Index l = 0; l < a; ++l) g_aa_(l, k) = G_(active_[l], active_[k]);
  }
  r_a_.resize(a);
  for (Index k = 0; k < a; ++k) r_a_[k] = grad_[active_[k]];
  const double half = 0.5 * lambda;
  int polish_attempts = 0;
  while (budget > 0) {
    double max_change = 0.0;
    for (Index k = 0; k < a; ++k) {
      const int j = active_[k];
      const double gjj = g_aa_(k, k);
      const double old = beta_[j];
      const double updated = gjj > 0.0 ? soft(r_a_[k] + gjj * old, half) / gjj : 0.0;
      const double delta = updated - old;
      if (delta != 0.0) {
        r_a_.noalias() -= delta * g_aa_.col(k);
        beta_[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    ++iterations_;
    --budget;
    if (max_change < tol) return true;
    if (max_change < kPolishThreshold && polish_attempts < kMaxPolish) {
      ++polish_attempts;
      polish(lambda);
    }
  }
  return false;
}

bool CdSolver::polish(double lambda) {
  // Once the signs have settled, stationarity on the support is the linear
  // system G_SS b = c_S - (lambda / 2) sign(b_S). Accept its solution only if
  // it reproduces the signs; the caller's sweeps then confirm optimality.
  std::vector<Index> pos;
  for (Index k = 0; k < static_cast<Index>(active_.size()); ++k)
    if (beta_[active_[k]] != 0.0) pos.push_back(k);
  const auto s = static_cast<Index>(pos.size());
  if (s == 0) return false;
  Matrix gss(s, s);
  Vector rhs(s);
  for (Index b = 0; b < s; ++b) {
    for (Index a = 0; a < s; ++a) gss(a, b) = g_aa_(pos[a], pos[b]);
    const int j = active_[pos[b]];
    rhs[b] = c_[j] - 0.5 * lambda * (beta_[j] > 0 ? 1.0 : -1.0);
  }
  Eigen::LLT<Matrix> llt(gss);
  if (llt.info() != Eigen::Success) return false;
  const Vector sol = llt.solve(rhs);
  for (Index b = 0; b < s; ++b) {
    const double old = beta_[active_[pos[b]]];
    if (!std::isfinite(sol[b]) || sol[b] == 0.0 || (sol[b] > 0) != (old > 0)) return false;
  }
  for (Index b = 0; b < s; ++b) beta_[active_[pos[b]]] = sol[b];
  for (Index k = 0; k < static_cast<Index>(active_.size()); ++k) {
    double v = c_[active_[k]];
    for (Index b = 0; b < s; ++b) v -= g_aa_(k, pos[b]) * sol[b];
    r_a_[k] = v;
  }
  return true;
}

void CdSolver::solve(double lambda) {
  require(std::isfinite(lambda) && lambda > 0.0, "fit_lasso: lambda must be positive and finite");
  iterations_ = 0;
  converged_ = false;
  long budget = opt_.max_iter;
  refresh_gradient();
  double tol = opt_.tol_cd;
  for (;;) {
    if (!inner_sweeps(lambda, tol, budget)) break;
    refresh_gradient();
    std::vector<int> violators;
    for (Index j = 0; j < c_.size(); ++j)
      if (!in_active_[static_cast<std::size_t>(j)] && 2.0 * std::abs(grad_[j]) > lambda)
        violators.push_back(static_cast<int>(j));
    if (!violators.empty()) {
      for (const int j : violators) add_to_active(j);
      g_aa_.resize(0, 0);
      continue;
    }
    kkt_ = 0.0;
    for (const int j : active_) {
      const double two_g = 2.0 * grad_[j];
      const double v = beta_[j] != 0.0 ? std::abs(two_g - lambda * (beta_[j] > 0 ? 1.0 : -1.0))
                                       : std::max(0.0, std::abs(two_g) - lambda);
      kkt_ = std::max(kkt_, v);
    }
    // The coefficient-change rule can stop slightly early on ill-conditioned
    // active sets; tighten until the optimality residual is well inside tolerance.
    if (kkt_ > 0.1 * opt_.kkt_tol && tol > 1e-15) {
      tol *= 1e-2;
      continue;
    }
    converged_ = true;
    break;
  }
  if (!converged_) {
    refresh_gradient();
    kkt_ = kkt_residual(G_, c_, beta_, lambda);
  }
}

EquationFit fit_lasso(const DesignMatrices& design, const GramCache& gram, int equation, double lambda,
                      const LassoOptions& options) {
  require(equation >= 0 && equation < design.n, "fit_lasso: equation index out of range");
  CdSolver solver(gram.G, gram.C.col(equation), options);
  solver.solve(lambda);
  return make_fit(design, equation, solver, lambda);
}

EquationFit fit_lasso(const DesignMatrices& design, int equation, double lambda, const LassoOptions& options) {
  return fit_lasso(design, make_gram_cache(design), equation, lambda, options);
}

double lambda_max(const GramCache& gram, int equation) { return 2.0 * gram.C.col(equation).lpNorm<Eigen::Infinity>(); }

RegularizationPath compute_path(const DesignMatrices& design, const GramCache& gram, int equation,
                                const PathOptions& path, const LassoOptions& options) {
  require(path.grid_points >= 1, "compute_path: grid_points must be >= 1");
  require(path.ratio > 0.0 && path.ratio < 1.0, "compute_path: ratio must be in (0, 1)");
  require(equation >= 0 && equation < design.n, "compute_path: equation index out of range");
  const int max_df = path.max_df > 0 ? path.max_df : std::max(1, design.T_eff() / 2);
  double top = lambda_max(gram, equation);
  if (!(top > 0.0)) top = 1.0;  // X'Y_i = 0: every lambda gives the zero fit

  RegularizationPath out;
  const int g = path.grid_points;
  out.lambdas.reserve(static_cast<std::size_t>(g));
  for (int k = 0; k < g; ++k) {
    const double frac = g == 1 ? 0.0 : static_cast<double>(k) / (g - 1);
    out.lambdas.push_back(top * std::pow(path.ratio, frac));
  }
  CdSolver solver(gram.G, gram.C.col(equation), options);
  for (std::size_t k = 0; k < out.lambdas.size(); ++k) {
    solver.solve(out.lambdas[k]);
    out.fits.push_back(make_fit(design, equation, solver, out.lambdas[k]));
    const auto& f = out.fits.back();
    out.bic.push_back(bic_score(f.rss, f.df(), design.T_eff()));
    if (f.df() >= max_df && k + 1 < out.lambdas.size()) {
      out.truncated = true;
      out.lambdas.resize(k + 1);
      break;
    }
  }
  return out;
}

double bic_score(double rss, int df, int T_eff) {
  if (!(rss > 0.0)) return -std::numeric_limits<double>::infinity();
  return T_eff * std::log(rss / T_eff) + df * std::log(static_cast<double>(T_eff));
}

std::size_t bic_select(const RegularizationPath& path) {
  require(!path.fits.empty(), "bic_select: empty path");
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < path.fits.size(); ++k) {
    // Interpolating fits (zero residual) have BIC = -inf and are not eligible.
    if (!(path.fits[k].rss > 0.0)) continue;
    if (!best || path.bic[k] < path.bic[*best]) best = k;
  }
  if (!best) throw NumericalError("bic_select: every point on the path has zero residual sum of squares");
  return *best;
}

bool LassoFit::all_converged() const {
  return std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; });
}

LassoFit fit_all_equations(const DesignMatrices& design, const PenaltyStrategy& strategy, const LassoOptions& options,
                           int threads) {
  return fit_all_equations(design, make_gram_cache(design), strategy, options, threads);
}

LassoFit fit_all_equations(const DesignMatrices& design, const GramCache& gram, const PenaltyStrategy& strategy,
                           const LassoOptions& options, int threads) {
  const int n = design.n;
  LassoFit fit;
  fit.n = n;
  fit.p = design.p;
  fit.T_eff = design.T_eff();
  fit.strategy = strategy.name();
  fit.beta = Matrix::Zero(design.width(), n);
  fit.lambda.assign(static_cast<std::size_t>(n), 0.0);
  fit.active_sets.assign(static_cast<std::size_t>(n), {});
  fit.iterations.assign(static_cast<std::size_t>(n), 0);
  fit.kkt_residual.assign(static_cast<std::size_t>(n), 0.0);
  fit.converged.assign(static_cast<std::size_t>(n), 0);
  fit.rss.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<std::string> errors(static_cast<std::size_t>(n));

  double shared_lambda = 0.0;
  if (strategy.kind == PenaltyStrategy::Kind::kFixed) {
    shared_lambda = strategy.lambda;
    require(std::isfinite(shared_lambda) && shared_lambda > 0.0, "fit: fixed lambda must be positive");
  } else if (strategy.kind == PenaltyStrategy::Kind::kTheoretical) {
    require(strategy.safety >= 1.0, "fit: safety factor must be >= 1");
    shared_lambda = strategy.safety * theoretical_lambda(design.T_eff(), n, design.p, strategy.epsilon,
                                                         strategy.tau_star, strategy.alpha);
  }

  parallel_for(n, threads, [&](int i) {
    const auto slot = static_cast<std::size_t>(i);
    try {
      EquationFit f;
      if (strategy.kind == PenaltyStrategy::Kind::kBic) {
        auto path = compute_path(design, gram, i, strategy.path, options);
        f = std::move(path.fits[bic_select(path)]);
      } else {
        f = fit_lasso(design, gram, i, shared_lambda, options);
      }
      fit.beta.col(i) = f.beta;
      fit.lambda[slot] = f.lambda;
      fit.active_sets[slot] = std::move(f.active);
      fit.iterations[slot] = f.iterations;
      fit.kkt_residual[slot] = f.kkt_residual;
      fit.converged[slot] = f.converged ? 1 : 0;
      fit.rss[slot] = f.rss;
    } catch (const std::exception& e) {
      errors[slot] = e.what();
    }
  });
  for (int i = 0; i < n; ++i)
    if (!errors[static_cast<std::size_t>(i)].empty())
      fit.failures.push_back({i, errors[static_cast<std::size_t>(i)]});
  return fit;
}

void to_json(nlohmann::json& j, const LassoFit& fit) {
  nlohmann::json eqs = nlohmann::json::array();
  for (int i = 0; i < fit.n; ++i) {
    const auto slot = static_cast<std::size_t>(i);
    nlohmann::json nz = nlohmann::json::array();
    for (Index r = 0; r < fit.beta.rows(); ++r)
      if (fit.beta(r, i) != 0.0) nz.push_back({r, fit.beta(r, i)});
    eqs.push_back({{"equation", i},
                   {"lambda", fit.lambda[slot]},
                   {"nonzeros", std::move(nz)},
                   {"kkt_residual", fit.kkt_residual[slot]},
                   {"iterations", fit.iterations[slot]},
                   {"converged", fit.converged[slot] != 0},
                   {"rss", fit.rss[slot]}});
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : fit.failures) failures.push_back({{"equation", f.equation}, {"message", f.message}});
  j = {{"n", fit.n},     {"p", fit.p},   {"T_eff", fit.T_eff}, {"strategy", fit.strategy},
       {"equations", std::move(eqs)}, {"failures", std::move(failures)}};
}

}  // namespace hdvar
