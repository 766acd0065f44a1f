#include "commands.hpp"

#include <hdvar/lasso.hpp>
#include <hdvar/panel_io.hpp>

#include <iostream>
#include <memory>

namespace hdvar::cli {

namespace {

struct FitOptions {
  std::string panel;
  int p = 1;
  std::string select = "bic";
  double lambda = 0.0;
  double epsilon = 1.0;
  double tau_star = 1.0;
  double alpha = 2.0;
  double safety = 1.01;
  PathOptions path;
  LassoOptions lasso;
  std::string out;
};

void run_fit(const FitOptions& o, RunContext& ctx) {
  ctx.manifest->add_input(o.panel);
  const TimeSeriesPanel panel = read_panel(o.panel);
  const DesignMatrices design = build_design(panel, o.p);

  PenaltyStrategy strategy;
  if (o.select == "fixed") {
    strategy = PenaltyStrategy::fixed(o.lambda);
  } else if (o.select == "theoretical") {
    strategy = PenaltyStrategy::fixed(
        o.safety * theoretical_lambda(design.T_eff(), design.n, o.p, o.epsilon, o.tau_star, o.alpha));
  } else {
    strategy = PenaltyStrategy::bic(o.path);
  }
  if (ctx.global.verbosity > 0)
    std::cerr << "fitting " << design.n << " equations, " << design.width() << " regressors, T_eff = "
              << design.T_eff() << ", penalty " << o.select << '\n';
  const LassoFit fit = fit_all_equations(design, strategy, o.lasso, ctx.global.threads);

  nlohmann::json j = fit;
  j["penalty"] = o.select;
  j["panel"] = {{"path", o.panel}, {"T", panel.T()}, {"n", panel.n()}};
  write_json(j, o.out);
  if (!o.out.empty() && o.out != "-") ctx.manifest->add_output(o.out);
  ctx.manifest_path = manifest_next_to(o.out);

  int nonconverged = 0;
  for (const char c : fit.converged) nonconverged += c == 0;
  if (nonconverged > 0) std::cerr << "hdvar fit: warning: " << nonconverged << " equation(s) did not converge\n";
  if (!fit.failures.empty())
    throw NumericalError(std::to_string(fit.failures.size()) + " equation(s) failed; first: equation " +
                         std::to_string(fit.failures.front().equation) + ": " + fit.failures.front().message);
}

}  // namespace

void add_fit(CLI::App& root, Runner& runner) {
  auto o = std::make_shared<FitOptions>();
  auto* app = root.add_subcommand("fit", "Fit every equation of a VAR(p) by lasso");
  app->add_option("--panel", o->panel, "Panel file (.csv, or .bin for the binary layout)")->required();
  app->add_option("--p", o->p, "Lag order")->required()->check(CLI::PositiveNumber);
  auto* select = app->add_option("--select", o->select, "Penalty selection: bic path search, fixed lambda, or the theoretical rate")
                     ->check(CLI::IsMember({"bic", "fixed", "theoretical"}))
                     ->capture_default_str();
  auto* lambda = app->add_option("--lambda", o->lambda, "Fixed penalty (implies --select fixed)")->check(CLI::PositiveNumber);
  app->add_option("--epsilon", o->epsilon, "Theoretical rate: epsilon")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--tau-star", o->tau_star, "Theoretical rate: tau*")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--alpha", o->alpha, "Theoretical rate: tail exponent")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--safety", o->safety, "Theoretical rate: multiplier above the bound")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--grid-points", o->path.grid_points, "BIC path length")->check(CLI::Range(2, 100000))->capture_default_str();
  app->add_option("--ratio", o->path.ratio, "Smallest over largest lambda on the path")->check(CLI::Range(1e-12, 0.999999))->capture_default_str();
  app->add_option("--max-df", o->path.max_df, "Stop the path at this active-set size (0: T_eff / 2)")->capture_default_str();
  app->add_option("--kkt-tol", o->lasso.kkt_tol, "KKT residual target")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--tol", o->lasso.tol_cd, "Coordinate-descent change tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--max-iter", o->lasso.max_iter, "Sweep budget per solve")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--out", o->out, "Fit JSON path (default stdout)");
  app->callback([o, &runner, select, lambda] {
    if (lambda->count() > 0) {
      if (select->count() > 0 && o->select != "fixed")
        throw CLI::ValidationError("fit", "--lambda only combines with --select fixed");
      o->select = "fixed";
    }
    if (o->select == "fixed" && lambda->count() == 0) throw CLI::ValidationError("fit", "--select fixed needs --lambda");
    runner = [o](RunContext& ctx) { run_fit(*o, ctx); };
  });
}

}  // namespace hdvar::cli
