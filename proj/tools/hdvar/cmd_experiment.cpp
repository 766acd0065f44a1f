#include "commands.hpp"

#include <hdvar/experiment.hpp>

#include <filesystem>
#include <iostream>
#include <memory>

namespace hdvar::cli {

namespace {

struct ExperimentOptions {
  std::string config;
  std::string out = "results";
  bool dry_run = false;
  int replications = 0;
};

void run_theory(const ExperimentOptions& o, const nlohmann::json& doc, RunContext& ctx) {
  TheoryConfig config = theory_config_from_json(doc);
  if (ctx.seed_given) config.seed = ctx.global.seed;
  if (ctx.threads_given) config.threads = ctx.global.threads;
  if (o.replications > 0) config.replications = o.replications;
  config.validate();
  nlohmann::json echo;
  to_json(echo, config);
  echo["theory"].erase("threads");
  if (o.dry_run) {
    write_json({{"kind", "theory"}, {"valid", true}, {"config", echo}, {"config_hash", to_hex(config_hash(echo))}}, "-");
    return;
  }
  if (ctx.global.verbosity > 0)
    std::cerr << "theory battery: " << config.replications << " replications, T = " << config.T << ", n = " << config.n
              << ", p = " << config.p << '\n';
  const TheoryReport report = verify_theory(config);
  write_theory_outputs(report, o.out);
  const std::filesystem::path dir(o.out);
  ctx.manifest->add_output((dir / "theory.json").string());
  ctx.manifest->add_output((dir / "theory_summary.csv").string());
  ctx.manifest->add_output((dir / "theory_replications.csv").string());
  ctx.manifest->set("config_hash", to_hex(config_hash(echo)));
  ctx.manifest->set("seed", config.seed);
  ctx.manifest_path = (dir / "manifest.json").string();
}

void run_experiment_cmd(const ExperimentOptions& o, RunContext& ctx) {
  ctx.manifest->add_input(o.config);
  const nlohmann::json doc = parse_toml_file(o.config);
  if (doc.contains("theory")) {
    run_theory(o, doc, ctx);
    return;
  }
  ExperimentConfig config = experiment_config_from_json(doc);
  if (ctx.seed_given) config.seed = ctx.global.seed;
  if (ctx.threads_given) config.threads = ctx.global.threads;
  if (o.replications > 0) config.replications = o.replications;
  config.validate();
  if (o.dry_run) {
    nlohmann::json echo = config;
    echo["experiment"].erase("threads");
    nlohmann::json cells = nlohmann::json::array();
    for (const int T : config.T_grid)
      for (const int c : config.c_grid) cells.push_back({{"T", T}, {"c", c}, {"n", c * T}, {"p", config.lag_order()}});
    write_json({{"kind", "experiment"}, {"valid", true}, {"cells", cells}, {"config", echo},
                {"config_hash", to_hex(config_hash(echo))}},
               "-");
    return;
  }
  if (ctx.global.verbosity > 0)
    std::cerr << "running " << config.T_grid.size() * config.c_grid.size() << " cell(s), " << config.replications
              << " replications each\n";
  const ExperimentReport report = run_experiment(config);
  if (ctx.global.verbosity > 0)
    for (const auto& cell : report.cells)
      std::cerr << "cell T = " << cell.T << ", c = " << cell.c << ": mse " << cell.mse.mean << " (se " << cell.mse.se
                << "), msfe ratio " << cell.msfe_ratio.mean << '\n';
  write_experiment_outputs(report, o.out);
  const std::filesystem::path dir(o.out);
  for (const char* name : {"report.json", "table1.csv", "diagnostics.csv"})
    ctx.manifest->add_output((dir / name).string());
  ctx.manifest->set("config_hash", to_hex(report.config_hash));
  ctx.manifest->set("seed", config.seed);
  ctx.manifest_path = (dir / "manifest.json").string();
  for (const auto& cell : report.cells)
    if (!cell.failures.empty())
      std::cerr << "hdvar experiment: cell T = " << cell.T << ", c = " << cell.c << ": " << cell.failures.size()
                << " replication(s) failed and were excluded\n";
}

}  // namespace

void add_experiment(CLI::App& root, Runner& runner) {
  auto o = std::make_shared<ExperimentOptions>();
  auto* app = root.add_subcommand(
      "experiment",
      "Run a Monte Carlo study from a TOML config ([experiment], [penalty], [lasso], [design]); a config with a "
      "[theory] table runs the theory verification battery instead");
  app->add_option("config", o->config, "TOML config file")->required();
  app->add_option("--out", o->out, "Output directory")->capture_default_str();
  app->add_flag("--dry-run", o->dry_run, "Validate the config and grid, print the cells, run nothing");
  app->add_option("--replications", o->replications, "Override the configured replication count")
      ->check(CLI::PositiveNumber);
  app->callback([o, &runner] { runner = [o](RunContext& ctx) { run_experiment_cmd(*o, ctx); }; });
}

}  // namespace hdvar::cli
