#include "commands.hpp"

#include <hdvar/lasso.hpp>
#include <hdvar/panel_io.hpp>
#include <hdvar/theory_bounds.hpp>

#include <Eigen/Eigenvalues>

#include <iostream>
#include <limits>
#include <memory>

namespace hdvar::cli {

namespace {

struct DiagnoseOptions {
  std::string panel;
  std::string spec;
  std::string constants;
  int p = 0;
  double lambda = 0.0;
  double epsilon = 3.0;
  double tau_star = 1.0;
  double alpha = 2.0;
  double safety = 1.01;
  double q = 0.0;
  int rsc_samples = 30;
  double gram_a = 0.0;
  int max_gram_dim = 2000;
  InnovationFlags innovation;
  std::string out;
};

GramConstants read_constants(const std::string& path, GramConstants k) {
  const nlohmann::json j = read_json_file(path);
  auto get = [&](const char* key, double& v) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
      v = std::numeric_limits<double>::infinity();
      return;
    }
    if (!j.at(key).is_number()) throw ValidationError("constants: '" + std::string(key) + "' must be a number");
    v = j.at(key).get<double>();
  };
  get("b1", k.b1);
  get("b8", k.b8);
  get("c_phi", k.c_phi);
  get("gamma1", k.gamma1);
  get("a2", k.a2);
  get("gamma2", k.gamma2);
  get("xi", k.xi);
  get("tau", k.tau);
  get("alpha", k.alpha);
  return k;
}

void run_diagnose(const DiagnoseOptions& o, RunContext& ctx) {
  ctx.manifest->add_input(o.panel);
  ctx.manifest->add_input(o.spec);
  const TimeSeriesPanel panel = read_panel(o.panel);
  const VarSpec spec = var_spec_from_json(read_json_file(o.spec));
  require(spec.n() == panel.n(), "spec has n = " + std::to_string(spec.n()) + " but the panel has " +
                                     std::to_string(panel.n()) + " series");
  const int p = o.p > 0 ? o.p : spec.p();
  require(p >= spec.p(), "--p must be at least the spec's lag order");
  std::vector<Matrix> lags = spec.coeffs();
  while (static_cast<int>(lags.size()) < p) lags.push_back(Matrix::Zero(spec.n(), spec.n()));
  const VarSpec truth(lags, spec.intercept());
  const Matrix beta_star = truth.stacked();

  const InnovationSpec innov = make_innovation(o.innovation, spec.n(), "gaussian");
  GramConstants constants = default_gram_constants(spec, innov);
  if (!o.constants.empty()) {
    ctx.manifest->add_input(o.constants);
    constants = read_constants(o.constants, constants);
  }

  const DesignMatrices design = build_design(panel, p);
  const GramCache gram = make_gram_cache(design);
  const int n = design.n;
  const double lambda =
      o.lambda > 0.0 ? o.lambda
                     : o.safety * theoretical_lambda(design.T_eff(), n, p, o.epsilon, o.tau_star, o.alpha);

  nlohmann::json j;
  const StabilityReport st = is_stable(spec);
  j["stability"] = {{"stable", st.stable}, {"spectral_radius", st.spectral_radius}, {"assumption", "A1"}};
  // Population autocovariances do not exist without A1.
  require(st.stable, "true spec violates A1: companion spectral radius " + std::to_string(st.spectral_radius) + " >= 1");
  j["lambda"] = {{"value", lambda}, {"source", o.lambda > 0.0 ? "fixed" : "theoretical"}, {"epsilon", o.epsilon},
                 {"pi1", pi1(o.epsilon)}};
  j["deviation_bound"] = deviation_bound_check(design, truth, lambda);
  j["constants"] = constants;

  const LassoFit fit = fit_all_equations(design, gram, PenaltyStrategy::fixed(lambda), LassoOptions{}, ctx.global.threads);
  if (!fit.failures.empty()) throw NumericalError("lasso failed on equation " + std::to_string(fit.failures.front().equation));

  const long dim = static_cast<long>(n) * p;
  if (dim > o.max_gram_dim) {
    j["gram"] = nullptr;
    j["rsc"] = nullptr;
    j["bounds"] = nullptr;
    j["skipped"] = "population Gram matrix needs np <= --max-gram-dim (" + std::to_string(o.max_gram_dim) + ")";
  } else {
    const Matrix sigma = stationary_innovation_covariance(innov);
    const Matrix gamma = population_gram(truth, sigma, p);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gamma, Eigen::EigenvaluesOnly);
    const double sigma_sq = es.eigenvalues().minCoeff();
    if (!(sigma_sq > 0.0)) throw NumericalError("population Gram matrix is not positive definite");
    const double eta = o.q == 0.0 ? 0.0 : lambda / sigma_sq;
    const SparsityProfile sparsity = sparsity_profile(beta_star, o.q, eta);
    const double r_q = sparsity.r_q();
    const double eta_q = o.q == 0.0 ? 1.0 : std::pow(eta, o.q);
    const double threshold = r_q > 0.0 ? sigma_sq * eta_q / (64.0 * r_q) : std::numeric_limits<double>::infinity();
    const double a = o.gram_a > 0.0 ? o.gram_a : threshold;
    j["gram"] = gram_concentration_check(gram, gamma, a, n, p, constants);
    j["sparsity"] = {{"q", o.q}, {"eta", eta}, {"r_q", r_q}, {"assumption", "A4"}};
    j["sigma_gamma_sq"] = sigma_sq;

    nlohmann::json rsc = nlohmann::json::array();
    nlohmann::json bounds = nlohmann::json::array();
    const double l2_bound = l2_error_bound(lambda, r_q, o.q, sigma_sq);
    for (int i = 0; i < n; ++i) {
      const Vector delta = fit.beta.col(i) - beta_star.col(i);
      RscInputs in;
      in.beta_star = beta_star.col(i);
      in.q = o.q;
      in.eta = eta;
      in.sigma_sq = sigma_sq;
      in.r_q = r_q;
      in.error_direction = delta;
      const RscReport r = rsc_check(gram.G, in, o.rsc_samples, derive_seed(ctx.global.seed, {static_cast<std::uint64_t>(i)}), &gamma);
      nlohmann::json rj = r;
      rj["equation"] = i;
      rsc.push_back(std::move(rj));
      const double l2 = delta.squaredNorm();
      const double pred = delta.dot(gram.G * delta);
      const double pred_bound = prediction_error_bound(lambda, beta_star.col(i).lpNorm<1>());
      bounds.push_back({{"equation", i},
                        {"l2_error", l2},
                        {"l2_bound", l2_bound},
                        {"l2_holds", l2 <= l2_bound},
                        {"prediction_error", pred},
                        {"prediction_bound", pred_bound},
                        {"prediction_holds", pred <= pred_bound}});
    }
    j["rsc"] = rsc;
    j["bounds"] = bounds;
  }
  write_json(j, o.out);
  if (!o.out.empty() && o.out != "-") ctx.manifest->add_output(o.out);
  ctx.manifest_path = manifest_next_to(o.out);
}

}  // namespace

void add_diagnose(CLI::App& root, Runner& runner) {
  auto o = std::make_shared<DiagnoseOptions>();
  auto* app = root.add_subcommand("diagnose", "Check the deviation bound, Gram concentration, RSC and error bounds against a known truth");
  app->add_option("--panel", o->panel, "Panel file (.csv or .bin)")->required();
  app->add_option("--spec", o->spec, "True VAR spec JSON")->required();
  app->add_option("--constants", o->constants, "JSON overriding Gram concentration constants (b1, b8, c_phi, gamma1, a2, gamma2, xi, tau, alpha)");
  app->add_option("--p", o->p, "Fitted lag order (default: the spec's)");
  app->add_option("--lambda", o->lambda, "Penalty (default: theoretical rate)")->check(CLI::PositiveNumber);
  app->add_option("--epsilon", o->epsilon, "Theoretical rate: epsilon")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--tau-star", o->tau_star, "Theoretical rate: tau*")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--alpha", o->alpha, "Theoretical rate: tail exponent")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--safety", o->safety, "Theoretical rate: multiplier above the bound")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--q", o->q, "Weak sparsity exponent in [0, 1)")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
  app->add_option("--rsc-samples", o->rsc_samples, "Cone directions sampled per equation")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--gram-a", o->gram_a, "Deviation level for the Gram check (default: the RSC threshold)")->check(CLI::PositiveNumber);
  app->add_option("--max-gram-dim", o->max_gram_dim, "Skip population Gram work above this np")->capture_default_str();
  app->add_option("--out", o->out, "Diagnostics JSON path (default stdout)");
  add_innovation_flags(*app, o->innovation);
  app->callback([o, &runner] { runner = [o](RunContext& ctx) { run_diagnose(*o, ctx); }; });
}

}  // namespace hdvar::cli
