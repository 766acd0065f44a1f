#include <hdvar/experiment.hpp>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace hdvar {

namespace {

void check_theory_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ValidationError("config: [" + where + "] must be a table");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) throw ValidationError("config: unknown key '" + item.key() + "' in [" + where + "]");
}

template <typename T>
void get_if(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ValidationError("config: '" + std::string(key) + "' in [" + where + "] must be a number");
  }
  try {
    out = v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config: '" + std::string(key) + "' in [" + where + "] has the wrong type");
  }
}

}  // namespace

void TheoryConfig::validate() const {
  require(T >= 10, "theory: T must be >= 10");
  require(n >= 1 && p >= 1, "theory: n and p must be positive");
  require(replications >= 1, "theory: replications must be >= 1");
  require(epsilon > 0.0 && tau_star > 0.0 && alpha > 0.0 && safety > 0.0,
          "theory: epsilon, tau_star, alpha and safety must be positive");
  require(q >= 0.0 && q < 1.0, "theory: q must be in [0, 1)");
  require(rsc_samples >= 1, "theory: rsc_samples must be >= 1");
  require(threads >= 0, "theory: threads must be >= 0");
  require(design.second_lag <= p, "theory: design.second_lag exceeds p");
  require(n % design.block_size == 0, "theory: n must be divisible by design.block_size");
  for (const double a : gram_a_grid) require(a > 0.0, "theory: gram_a_grid entries must be positive");
  const DesignPair pair = build_block_design(design.block_size, design);
  require(is_stable(pair.spec).stable, "theory: design violates A1 (companion spectral radius >= 1)");
  // Evaluated for its side condition.
  (void)theoretical_lambda(T - p, n, p, epsilon, tau_star, alpha);
}

void to_json(nlohmann::json& j, const TheoryConfig& c) {
  nlohmann::json constants;
  to_json(constants, c.constants);
  j = {{"theory",
        {{"T", c.T},
         {"n", c.n},
         {"p", c.p},
         {"replications", c.replications},
         {"seed", c.seed},
         {"epsilon", c.epsilon},
         {"tau_star", c.tau_star},
         {"alpha", c.alpha},
         {"safety", c.safety},
         {"q", c.q},
         {"rsc_samples", c.rsc_samples},
         {"threads", c.threads},
         {"gram_a_grid", c.gram_a_grid}}},
       {"design",
        {{"block_size", c.design.block_size},
         {"a1_entry", c.design.a1_entry},
         {"second_entry", c.design.second_entry},
         {"second_lag", c.design.second_lag},
         {"c0_diag", c.design.c0_diag},
         {"psi_diag", c.design.psi_diag}}},
       {"constants", constants}};
}

TheoryConfig theory_config_from_json(const nlohmann::json& j) {
  check_theory_keys(j, "root", {"theory", "design", "constants"});
  TheoryConfig c;
  if (j.contains("theory")) {
    const auto& t = j.at("theory");
    check_theory_keys(t, "theory", {"T", "n", "p", "replications", "seed", "epsilon", "tau_star", "alpha", "safety",
                                    "q", "rsc_samples", "threads", "gram_a_grid"});
    get_if(t, "T", c.T, "theory");
    get_if(t, "n", c.n, "theory");
    get_if(t, "p", c.p, "theory");
    get_if(t, "replications", c.replications, "theory");
    if (t.contains("seed")) {
      if (!t.at("seed").is_number_integer() || t.at("seed").get<long long>() < 0)
        throw ValidationError("config: 'seed' in [theory] must be a non-negative integer");
      c.seed = t.at("seed").get<std::uint64_t>();
    }
    get_if(t, "epsilon", c.epsilon, "theory");
    get_if(t, "tau_star", c.tau_star, "theory");
    get_if(t, "alpha", c.alpha, "theory");
    get_if(t, "safety", c.safety, "theory");
    get_if(t, "q", c.q, "theory");
    get_if(t, "rsc_samples", c.rsc_samples, "theory");
    get_if(t, "threads", c.threads, "theory");
    get_if(t, "gram_a_grid", c.gram_a_grid, "theory");
  }
  if (j.contains("design")) {
    const auto& d = j.at("design");
    check_theory_keys(d, "design", {"block_size", "a1_entry", "second_entry", "second_lag", "c0_diag", "psi_diag"});
    get_if(d, "block_size", c.design.block_size, "design");
    get_if(d, "a1_entry", c.design.a1_entry, "design");
    get_if(d, "second_entry", c.design.second_entry, "design");
    get_if(d, "second_lag", c.design.second_lag, "design");
    get_if(d, "c0_diag", c.design.c0_diag, "design");
    get_if(d, "psi_diag", c.design.psi_diag, "design");
  }
  if (j.contains("constants")) {
    const auto& k = j.at("constants");
    check_theory_keys(k, "constants", {"b1", "b8", "c_phi", "gamma1", "a2", "gamma2", "xi", "tau", "alpha"});
    get_if(k, "b1", c.constants.b1, "constants");
    get_if(k, "b8", c.constants.b8, "constants");
    get_if(k, "c_phi", c.constants.c_phi, "constants");
    get_if(k, "gamma1", c.constants.gamma1, "constants");
    if (k.contains("a2") && k.at("a2").is_null())
      c.constants.a2 = std::numeric_limits<double>::infinity();
    else
      get_if(k, "a2", c.constants.a2, "constants");
    get_if(k, "gamma2", c.constants.gamma2, "constants");
    get_if(k, "xi", c.constants.xi, "constants");
    get_if(k, "tau", c.constants.tau, "constants");
    get_if(k, "alpha", c.constants.alpha, "constants");
  }
  return c;
}

TheoryReport verify_theory(const TheoryConfig& config) {
  config.validate();
  TheoryReport rep;
  rep.config = config;
  to_json(rep.config_json, config);
  rep.config_json["theory"].erase("threads");

  const DesignPair pair = build_block_design(config.n, config.design);
  const VarSpec& spec = pair.spec;
  // The fitted lag order may exceed the design's; pad the truth with zero lags.
  std::vector<Matrix> lags = spec.coeffs();
  while (static_cast<int>(lags.size()) < config.p) lags.push_back(Matrix::Zero(config.n, config.n));
  const VarSpec truth(lags, spec.intercept());
  const Matrix beta_star = truth.stacked();

  const Matrix sigma = stationary_innovation_covariance(pair.innov);
  const Matrix gamma = population_gram(truth, sigma, config.p);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gamma, Eigen::EigenvaluesOnly);
  rep.sigma_gamma_sq = es.eigenvalues().minCoeff();
  if (!(rep.sigma_gamma_sq > 0.0)) throw NumericalError("verify_theory: population Gram matrix is not positive definite");

  rep.constants = config.constants.c_phi > 0.0 ? config.constants : default_gram_constants(spec, pair.innov);

  const int T_eff = config.T - config.p;
  rep.lambda = config.safety * theoretical_lambda(T_eff, config.n, config.p, config.epsilon, config.tau_star,
                                                  config.alpha);
  rep.pi1 = pi1(config.epsilon);

  // Exact sparsity (q = 0) puts eta at 0; otherwise use the theorem's eta = lambda / sigma^2.
  rep.eta = config.q == 0.0 ? 0.0 : rep.lambda / rep.sigma_gamma_sq;
  const SparsityProfile sparsity = sparsity_profile(beta_star, config.q, rep.eta);
  rep.r_q = sparsity.r_q();
  rep.l2_bound = l2_error_bound(rep.lambda, rep.r_q, config.q, rep.sigma_gamma_sq);
  const double eta_q = config.q == 0.0 ? 1.0 : std::pow(rep.eta, config.q);
  rep.rsc_threshold = rep.r_q > 0.0 ? rep.sigma_gamma_sq * eta_q / (64.0 * rep.r_q)
                                    : std::numeric_limits<double>::infinity();
  std::vector<double> pred_bounds(static_cast<std::size_t>(config.n));
  for (int i = 0; i < config.n; ++i)
    pred_bounds[static_cast<std::size_t>(i)] = prediction_error_bound(rep.lambda, beta_star.col(i).lpNorm<1>());
  rep.prediction_bound = *std::max_element(pred_bounds.begin(), pred_bounds.end());

  const int burn_in = default_burn_in(config.p);
  const auto& grid = config.gram_a_grid;
  std::vector<std::vector<char>> exceed(static_cast<std::size_t>(config.replications),
                                        std::vector<char>(grid.size(), 0));
  rep.replications.resize(static_cast<std::size_t>(config.replications));
  const PenaltyStrategy fixed = PenaltyStrategy::fixed(rep.lambda);

  parallel_for(config.replications, config.threads, [&](int k) {
    TheoryReplication& r = rep.replications[static_cast<std::size_t>(k)];
    r.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(k)});
    try {
      const TimeSeriesPanel panel = simulate(spec, pair.innov, config.T, burn_in, r.seed);
      const DesignMatrices design = build_design(panel, config.p);
      const GramCache gram = make_gram_cache(design);

      const DeviationBoundReport db = deviation_bound_check(design, truth, rep.lambda);
      r.max_statistic = db.max_statistic();
      r.db_joint = db.joint;

      r.gram_deviation = gram_deviation(gram.G, gamma);
      for (std::size_t g = 0; g < grid.size(); ++g) exceed[static_cast<std::size_t>(k)][g] = r.gram_deviation > grid[g];
      r.rsc_hypothesis = r.gram_deviation <= rep.rsc_threshold;

      const LassoFit fit = fit_all_equations(design, gram, fixed, LassoOptions{}, 1);
      if (!fit.failures.empty()) throw NumericalError(fit.failures.front().message);
      r.rsc_min_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < config.n; ++i) {
        const Vector delta = fit.beta.col(i) - beta_star.col(i);
        const double l2 = delta.squaredNorm();
        const double pred = delta.dot(gram.G * delta);
        r.l2_max = std::max(r.l2_max, l2);
        r.prediction_max = std::max(r.prediction_max, pred);
        r.l2_violations += l2 > rep.l2_bound;
        r.prediction_violations += pred > pred_bounds[static_cast<std::size_t>(i)];

        RscInputs in;
        in.beta_star = beta_star.col(i);
        in.q = config.q;
        in.eta = rep.eta;
        in.sigma_sq = rep.sigma_gamma_sq;
        in.r_q = rep.r_q;
        in.error_direction = delta;
        const RscReport rsc = rsc_check(gram.G, in, config.rsc_samples,
                                        derive_seed(r.seed, {static_cast<std::uint64_t>(i)}));
        r.rsc_violations += rsc.violations;
        r.rsc_cone_failures += rsc.cone_failures;
        r.rsc_min_ratio = std::min(r.rsc_min_ratio, rsc.min_ratio);
      }
      r.ok = true;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
  });

  std::vector<int> exceed_count(grid.size(), 0);
  for (std::size_t k = 0; k < rep.replications.size(); ++k) {
    const auto& r = rep.replications[k];
    if (!r.ok) continue;
    ++rep.completed;
    for (std::size_t g = 0; g < grid.size(); ++g) exceed_count[g] += exceed[k][g];
    if (!r.db_joint) ++rep.db_failures;
    if (r.rsc_hypothesis) {
      ++rep.hypothesis_count;
      rep.rsc_violations_under_hypothesis += r.rsc_violations;
    }
    rep.rsc_cone_failures += r.rsc_cone_failures;
    if (r.db_joint) rep.prediction_violations_db += r.prediction_violations;
    if (r.db_joint && r.rsc_hypothesis) {
      ++rep.qualifying;
      rep.l2_violations_qualifying += r.l2_violations;
      rep.prediction_violations_qualifying += r.prediction_violations;
    }
  }
  rep.db_failure_frequency = rep.completed > 0 ? static_cast<double>(rep.db_failures) / rep.completed : 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    TheoryReport::GramPoint pt;
    pt.a = grid[g];
    pt.exceed_frequency = rep.completed > 0 ? static_cast<double>(exceed_count[g]) / rep.completed : 0.0;
    pt.pi2 = pi2(pt.a, config.n, config.p, config.T, rep.constants);
    pt.side = gram_side_conditions(pt.a, config.n, config.p, config.T, rep.constants);
    rep.gram_points.push_back(pt);
  }
  return rep;
}

}  // namespace hdvar
