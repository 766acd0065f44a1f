#include <hdvar/experiment.hpp>
#include <hdvar/version.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

namespace hdvar {

std::string oracle_name(OracleKind kind) {
  return kind == OracleKind::kTrueParams ? "true-params" : "ols-on-support";
}

OracleKind parse_oracle(const std::string& name) {
  if (name == "true-params") return OracleKind::kTrueParams;
  if (name == "ols-on-support") return OracleKind::kOlsOnSupport;
  throw ValidationError("unknown oracle '" + name + "' (expected true-params or ols-on-support)");
}

namespace {

// Rejects keys the reader does not know, so typos in a config fail loudly.
void check_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ValidationError("config: [" + where + "] must be a table");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) throw ValidationError("config: unknown key '" + item.key() + "' in [" + where + "]");
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config: '" + std::string(key) + "' in [" + where + "] has the wrong type");
  }
}

void read_double(const nlohmann::json& j, const char* key, double& out, const std::string& where) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number())
    throw ValidationError("config: '" + std::string(key) + "' in [" + where + "] must be a number");
  out = j.at(key).get<double>();
}

nlohmann::json design_json(const SimulationDesign& d) {
  return {{"block_size", d.block_size}, {"a1_entry", d.a1_entry},   {"second_entry", d.second_entry},
          {"second_lag", d.second_lag}, {"c0_diag", d.c0_diag},     {"psi_diag", d.psi_diag}};
}

SimulationDesign design_from_json(const nlohmann::json& j, SimulationDesign d) {
  check_keys(j, "design", {"block_size", "a1_entry", "second_entry", "second_lag", "c0_diag", "psi_diag"});
  read(j, "block_size", d.block_size, "design");
  read_double(j, "a1_entry", d.a1_entry, "design");
  read_double(j, "second_entry", d.second_entry, "design");
  read(j, "second_lag", d.second_lag, "design");
  read_double(j, "c0_diag", d.c0_diag, "design");
  read_double(j, "psi_diag", d.psi_diag, "design");
  return d;
}

nlohmann::json penalty_json(const PenaltyStrategy& s) {
  nlohmann::json j = {{"kind", s.name()}};
  switch (s.kind) {
    case PenaltyStrategy::Kind::kBic:
      j["grid_points"] = s.path.grid_points;
      j["ratio"] = s.path.ratio;
      j["max_df"] = s.path.max_df;
      break;
    case PenaltyStrategy::Kind::kFixed:
      j["lambda"] = s.lambda;
      break;
    case PenaltyStrategy::Kind::kTheoretical:
      j["epsilon"] = s.epsilon;
      j["tau_star"] = s.tau_star;
      j["alpha"] = s.alpha;
      j["safety"] = s.safety;
      break;
  }
  return j;
}

PenaltyStrategy penalty_from_json(const nlohmann::json& j) {
  check_keys(j, "penalty", {"kind", "lambda", "epsilon", "tau_star", "alpha", "safety", "grid_points", "ratio", "max_df"});
  std::string kind = "bic";
  read(j, "kind", kind, "penalty");
  PenaltyStrategy s;
  if (kind == "bic") {
    s = PenaltyStrategy::bic();
  } else if (kind == "fixed") {
    s = PenaltyStrategy::fixed(0.0);
  } else if (kind == "theoretical") {
    s = PenaltyStrategy::theoretical(1.0, 1.0, 2.0);
  } else {
    throw ValidationError("config: unknown penalty kind '" + kind + "' (expected bic, fixed or theoretical)");
  }
  read_double(j, "lambda", s.lambda, "penalty");
  read_double(j, "epsilon", s.epsilon, "penalty");
  read_double(j, "tau_star", s.tau_star, "penalty");
  read_double(j, "alpha", s.alpha, "penalty");
  read_double(j, "safety", s.safety, "penalty");
  read(j, "grid_points", s.path.grid_points, "penalty");
  read_double(j, "ratio", s.path.ratio, "penalty");
  read(j, "max_df", s.path.max_df, "penalty");
  return s;
}

nlohmann::json lasso_json(const LassoOptions& o) {
  return {{"tol_cd", o.tol_cd}, {"max_iter", o.max_iter}, {"kkt_tol", o.kkt_tol}};
}

LassoOptions lasso_from_json(const nlohmann::json& j) {
  check_keys(j, "lasso", {"tol_cd", "max_iter", "kkt_tol"});
  LassoOptions o;
  read_double(j, "tol_cd", o.tol_cd, "lasso");
  read(j, "max_iter", o.max_iter, "lasso");
  read_double(j, "kkt_tol", o.kkt_tol, "lasso");
  return o;
}

void validate_penalty(const PenaltyStrategy& s) {
  switch (s.kind) {
    case PenaltyStrategy::Kind::kBic:
      require(s.path.grid_points >= 2, "config: penalty.grid_points must be >= 2");
      require(s.path.ratio > 0.0 && s.path.ratio < 1.0, "config: penalty.ratio must be in (0, 1)");
      break;
    case PenaltyStrategy::Kind::kFixed:
      require(s.lambda > 0.0 && std::isfinite(s.lambda), "config: penalty.lambda must be positive");
      break;
    case PenaltyStrategy::Kind::kTheoretical:
      require(s.epsilon > 0.0 && s.tau_star > 0.0 && s.alpha > 0.0 && s.safety > 0.0,
              "config: theoretical penalty needs positive epsilon, tau_star, alpha and safety");
      break;
  }
}

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (const double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (const double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return out;
}

// Ratio of means with a delta-method standard error.
MeanSe ratio_of_means(const std::vector<double>& num, const std::vector<double>& den) {
  MeanSe out;
  const MeanSe a = mean_se(num);
  const MeanSe b = mean_se(den);
  if (num.empty() || b.mean == 0.0) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    out.se = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.mean = a.mean / b.mean;
  std::vector<double> lin(num.size());
  for (std::size_t k = 0; k < num.size(); ++k) lin[k] = num[k] - out.mean * den[k];
  out.se = mean_se(lin).se / b.mean;
  return out;
}

// Everything a replication needs that depends only on the cell.
struct CellContext {
  int T = 0;
  int c = 0;
  int n = 0;
  int p = 0;
  int burn_in = 0;
  std::optional<DesignPair> pair;
  Matrix truth;  // stacked np x n
  std::vector<std::vector<int>> true_supports;
  std::optional<Matrix> gamma;
  double rsc_threshold = 0.0;
};

CellContext make_context(int T, int c, const ExperimentConfig& config) {
  CellContext ctx;
  ctx.T = T;
  ctx.c = c;
  ctx.n = c * T;
  ctx.p = config.lag_order();
  ctx.burn_in = config.burn_in >= 0 ? config.burn_in : default_burn_in(ctx.p);
  ctx.pair.emplace(build_block_design(ctx.n, config.design));
  ctx.truth = ctx.pair->spec.stacked();
  ctx.true_supports = supports_of(ctx.truth);
  if (static_cast<long>(ctx.n) * ctx.p <= config.rsc_max_dim) {
    const Matrix sigma = stationary_innovation_covariance(ctx.pair->innov);
    Matrix gamma = population_gram(ctx.pair->spec, sigma, ctx.p);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gamma, Eigen::EigenvaluesOnly);
    const double sigma_sq = es.eigenvalues().minCoeff();
    std::size_t r0 = 0;
    for (const auto& s : ctx.true_supports) r0 = std::max(r0, s.size());
    ctx.rsc_threshold = r0 > 0 ? sigma_sq / (64.0 * static_cast<double>(r0)) : std::numeric_limits<double>::infinity();
    ctx.gamma = std::move(gamma);
  }
  return ctx;
}

ReplicationResult replicate(const CellContext& ctx, int replication, const ExperimentConfig& config) {
  ReplicationResult r;
  r.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(ctx.T), static_cast<std::uint64_t>(ctx.c),
                                     static_cast<std::uint64_t>(replication)});
  try {
    const auto& spec = ctx.pair->spec;
    const TimeSeriesPanel panel = simulate(spec, ctx.pair->innov, ctx.T + config.horizon, ctx.burn_in, r.seed);
    const Matrix train = panel.data.topRows(ctx.T);
    const Vector actual = panel.data.row(ctx.T).transpose();
    const DesignMatrices design = build_design(train, ctx.p);
    const GramCache gram = make_gram_cache(design);

    PenaltyStrategy strategy = config.penalty;
    if (strategy.kind == PenaltyStrategy::Kind::kTheoretical)
      strategy = PenaltyStrategy::fixed(config.penalty.safety * theoretical_lambda(design.T_eff(), ctx.n, ctx.p,
                                                                                    config.penalty.epsilon,
                                                                                    config.penalty.tau_star,
                                                                                    config.penalty.alpha));
    const LassoFit fit = fit_all_equations(design, gram, strategy, config.lasso, 1);
    r.equation_failures = static_cast<int>(fit.failures.size());
    for (int i = 0; i < ctx.n; ++i) {
      const auto slot = static_cast<std::size_t>(i);
      if (!fit.converged[slot]) ++r.nonconverged;
      r.max_kkt = std::max(r.max_kkt, fit.kkt_residual[slot]);
      r.mean_df += static_cast<double>(fit.active_sets[slot].size());
    }
    r.mean_df /= ctx.n;
    if (r.equation_failures > 0) {
      r.error = "equation " + std::to_string(fit.failures.front().equation) + ": " + fit.failures.front().message;
      return r;
    }
    if (r.nonconverged > 0) {
      r.error = std::to_string(r.nonconverged) + " equation(s) did not converge";
      return r;
    }

    r.sq_error = (fit.beta - ctx.truth).squaredNorm();
    const double inv_n = 1.0 / ctx.n;
    r.msfe_lasso = (forecast(fit.beta, train, ctx.p) - actual).squaredNorm() * inv_n;
    const OracleFit oracle = oracle_fit(design, ctx.true_supports);
    r.oracle_rank_deficient =
        std::any_of(oracle.rank_deficient.begin(), oracle.rank_deficient.end(), [](char f) { return f != 0; });
    r.msfe_oracle_ols = (forecast(oracle.beta, train, ctx.p) - actual).squaredNorm() * inv_n;
    r.msfe_oracle_true = (forecast(spec, train) - actual).squaredNorm() * inv_n;

    const DeviationBoundReport db = deviation_bound_check(design, spec, 0.0);
    int held = 0;
    for (int i = 0; i < ctx.n; ++i)
      held += fit.lambda[static_cast<std::size_t>(i)] >= db.statistic[static_cast<std::size_t>(i)];
    r.db_equation_rate = static_cast<double>(held) / ctx.n;
    r.db_joint = held == ctx.n;

    if (ctx.gamma) r.rsc_hypothesis = gram_deviation(gram.G, *ctx.gamma) <= ctx.rsc_threshold ? 1 : 0;
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

CellStats aggregate(const CellContext& ctx, std::vector<ReplicationResult> results, int requested,
                    OracleKind oracle) {
  CellStats s;
  s.T = ctx.T;
  s.c = ctx.c;
  s.n = ctx.n;
  s.p = ctx.p;
  s.requested = requested;
  std::vector<double> mse, per_param, total, per_T, lasso, ols, truth, configured;
  double db_rate = 0.0;
  int db_joint = 0, rsc_evaluated = 0, rsc_holds = 0;
  const double n = ctx.n;
  const double params = n * n * ctx.p;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    s.nonconverged += r.nonconverged;
    if (!r.ok) {
      s.failures.push_back({static_cast<int>(k), r.seed, r.error});
      continue;
    }
    ++s.completed;
    mse.push_back(r.sq_error / n);
    per_param.push_back(r.sq_error / params);
    total.push_back(r.sq_error);
    per_T.push_back(r.sq_error / ctx.T);
    lasso.push_back(r.msfe_lasso);
    ols.push_back(r.msfe_oracle_ols);
    truth.push_back(r.msfe_oracle_true);
    configured.push_back(oracle == OracleKind::kTrueParams ? r.msfe_oracle_true : r.msfe_oracle_ols);
    s.mean_df += r.mean_df;
    s.max_kkt = std::max(s.max_kkt, r.max_kkt);
    db_rate += r.db_equation_rate;
    db_joint += r.db_joint;
    if (r.rsc_hypothesis >= 0) {
      ++rsc_evaluated;
      rsc_holds += r.rsc_hypothesis;
    }
    s.oracle_rank_deficient += r.oracle_rank_deficient;
  }
  s.mse = mean_se(mse);
  s.mse_per_parameter = mean_se(per_param);
  s.mse_total = mean_se(total);
  s.mse_per_T = mean_se(per_T);
  s.msfe_ratio = ratio_of_means(lasso, configured);
  s.msfe_ratio_ols = ratio_of_means(lasso, ols);
  s.msfe_ratio_true = ratio_of_means(lasso, truth);
  s.msfe_lasso = mean_se(lasso).mean;
  s.msfe_oracle = mean_se(configured).mean;
  if (s.completed > 0) {
    s.mean_df /= s.completed;
    s.db_equation_frequency = db_rate / s.completed;
    s.db_joint_frequency = static_cast<double>(db_joint) / s.completed;
  }
  if (rsc_evaluated > 0) s.rsc_hypothesis_frequency = static_cast<double>(rsc_holds) / rsc_evaluated;
  s.replications = std::move(results);
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!T_grid.empty() && !c_grid.empty(), "config: T_grid and c_grid must be non-empty");
  require(replications >= 1, "config: replications must be >= 1");
  require(horizon == 1, "config: only horizon = 1 is supported");
  require(threads >= 0, "config: threads must be >= 0");
  require(rsc_max_dim >= 0, "config: rsc_max_dim must be >= 0");
  require(design.block_size >= 1, "config: design.block_size must be >= 1");
  require(design.second_lag >= 1, "config: design.second_lag must be >= 1");
  validate_penalty(penalty);
  require(lasso.tol_cd > 0.0 && lasso.kkt_tol > 0.0 && lasso.max_iter >= 1, "config: invalid lasso options");
  const int p = lag_order();
  for (const int T : T_grid) {
    require(T > p + 1, "config: T = " + std::to_string(T) + " leaves no observations for a VAR(" +
                           std::to_string(p) + ")");
    for (const int c : c_grid) {
      require(c >= 1, "config: c must be >= 1");
      const long n = static_cast<long>(c) * T;
      require(n % design.block_size == 0, "config: n = c T = " + std::to_string(n) +
                                              " is not divisible by the block size " +
                                              std::to_string(design.block_size));
    }
  }
  // Block designs repeat one block, so stability of a single block decides every cell.
  const DesignPair block = build_block_design(design.block_size, design);
  const StabilityReport st = is_stable(block.spec);
  require(st.stable, "config: design violates A1 (companion spectral radius " + std::to_string(st.spectral_radius) +
                         " >= 1)");
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"experiment",
        {{"T_grid", c.T_grid},
         {"c_grid", c.c_grid},
         {"replications", c.replications},
         {"seed", c.seed},
         {"horizon", c.horizon},
         {"threads", c.threads},
         {"oracle", oracle_name(c.oracle)},
         {"burn_in", c.burn_in},
         {"rsc_max_dim", c.rsc_max_dim}}},
       {"penalty", penalty_json(c.penalty)},
       {"lasso", lasso_json(c.lasso)},
       {"design", design_json(c.design)}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  check_keys(j, "root", {"experiment", "penalty", "lasso", "design"});
  ExperimentConfig c;
  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    check_keys(e, "experiment", {"T_grid", "c_grid", "replications", "seed", "horizon", "threads", "oracle",
                                 "burn_in", "rsc_max_dim"});
    read(e, "T_grid", c.T_grid, "experiment");
    read(e, "c_grid", c.c_grid, "experiment");
    read(e, "replications", c.replications, "experiment");
    if (e.contains("seed")) {
      if (!e.at("seed").is_number_integer() || e.at("seed").get<long long>() < 0)
        throw ValidationError("config: 'seed' in [experiment] must be a non-negative integer");
      c.seed = e.at("seed").get<std::uint64_t>();
    }
    read(e, "horizon", c.horizon, "experiment");
    read(e, "threads", c.threads, "experiment");
    std::string oracle = oracle_name(c.oracle);
    read(e, "oracle", oracle, "experiment");
    c.oracle = parse_oracle(oracle);
    read(e, "burn_in", c.burn_in, "experiment");
    read(e, "rsc_max_dim", c.rsc_max_dim, "experiment");
  }
  if (j.contains("penalty")) c.penalty = penalty_from_json(j.at("penalty"));
  if (j.contains("lasso")) c.lasso = lasso_from_json(j.at("lasso"));
  if (j.contains("design")) c.design = design_from_json(j.at("design"), c.design);
  return c;
}

std::uint64_t config_hash(const nlohmann::json& canonical) {
  Fnv1a h;
  h.update(canonical.dump());
  return h.digest();
}

ReplicationResult run_replication(int T, int c, int replication, const ExperimentConfig& config) {
  const CellContext ctx = make_context(T, c, config);
  return replicate(ctx, replication, config);
}

CellStats run_cell(int T, int c, int replications, const ExperimentConfig& config) {
  require(replications >= 1, "run_cell: replications must be >= 1");
  require(c >= 1 && T >= 1, "run_cell: T and c must be positive");
  require((static_cast<long>(c) * T) % config.design.block_size == 0,
          "run_cell: c T must be divisible by the block size " + std::to_string(config.design.block_size));
  const CellContext ctx = make_context(T, c, config);
  std::vector<ReplicationResult> results(static_cast<std::size_t>(replications));
  parallel_for(replications, config.threads,
               [&](int k) { results[static_cast<std::size_t>(k)] = replicate(ctx, k, config); });
  return aggregate(ctx, std::move(results), replications, config.oracle);
}

const CellStats* ExperimentReport::find(int T, int c) const {
  for (const auto& cell : cells)
    if (cell.T == T && cell.c == c) return &cell;
  return nullptr;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  // The thread count cannot change results, so it is left out of the echo and hash.
  report.config = config;
  report.config["experiment"].erase("threads");
  report.config_hash = config_hash(report.config);
  report.version = kVersion;
  for (const int T : config.T_grid)
    for (const int c : config.c_grid) report.cells.push_back(run_cell(T, c, config.replications, config));
  return report;
}

}  // namespace hdvar
