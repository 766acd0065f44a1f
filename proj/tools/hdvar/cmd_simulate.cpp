#include "commands.hpp"

#include <hdvar/panel_io.hpp>

#include <filesystem>
#include <iostream>
#include <memory>

namespace hdvar::cli {

namespace {

struct SimulateOptions {
  bool table1 = false;
  std::string spec_path;
  int T = 0;
  int c = 1;
  int burn_in = -1;
  std::string out = "panel";
  std::string format = "both";
  InnovationFlags innovation;
};

void run_simulate(const SimulateOptions& o, RunContext& ctx) {
  std::optional<DesignPair> pair;
  if (o.table1) {
    SimulationDesign design;
    design.c0_diag = o.innovation.c0_diag;
    design.psi_diag = o.innovation.psi_diag;
    require((static_cast<long>(o.c) * o.T) % design.block_size == 0, "--table1 needs c T divisible by 5");
    pair.emplace(build_block_design(o.c * o.T, design));
    if (o.innovation.kind == "gaussian")
      pair.emplace(DesignPair{pair->spec, make_innovation(o.innovation, pair->spec.n(), "gaussian")});
  } else {
    ctx.manifest->add_input(o.spec_path);
    const VarSpec spec = var_spec_from_json(read_json_file(o.spec_path));
    pair.emplace(DesignPair{spec, make_innovation(o.innovation, spec.n(), "gaussian")});
  }
  const int burn_in = o.burn_in >= 0 ? o.burn_in : default_burn_in(pair->spec.p());
  if (ctx.global.verbosity > 0)
    std::cerr << "simulating T = " << o.T << ", n = " << pair->spec.n() << ", p = " << pair->spec.p() << ", "
              << pair->innov.kind_name() << " innovations, burn-in " << burn_in << '\n';
  const TimeSeriesPanel panel = simulate(pair->spec, pair->innov, o.T, burn_in, ctx.global.seed);

  const auto parent = std::filesystem::path(o.out).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    require(!ec, "cannot create '" + parent.string() + "': " + ec.message());
  }
  if (o.table1) {
    // The generated truth, so that diagnose can check the panel against it.
    write_json(nlohmann::json(pair->spec), o.out + ".spec.json");
    ctx.manifest->add_output(o.out + ".spec.json");
  }
  if (o.format == "csv" || o.format == "both") {
    write_panel_csv(panel, o.out + ".csv");
    ctx.manifest->add_output(o.out + ".csv");
  }
  if (o.format == "bin" || o.format == "both") {
    write_panel_binary(panel, o.out + ".bin");
    ctx.manifest->add_output(o.out + ".bin");
  }
  ctx.manifest->set("panel", {{"T", panel.T()},
                              {"n", panel.n()},
                              {"burn_in", panel.burn_in},
                              {"dgp_fingerprint", to_hex(panel.dgp_fingerprint)},
                              {"innovation", pair->innov.kind_name()}});
  ctx.manifest_path = o.out + ".manifest.json";
}

}  // namespace

void add_simulate(CLI::App& root, Runner& runner) {
  auto o = std::make_shared<SimulateOptions>();
  auto* app = root.add_subcommand("simulate", "Simulate a VAR panel and write it as CSV and binary");
  auto* table1 = app->add_flag("--table1", o->table1, "Use the block design of the Monte Carlo study with n = c T");
  auto* spec = app->add_option("--spec", o->spec_path, "VAR spec JSON ({n, p, coeffs, intercept})")
                   ->check(CLI::ExistingFile);
  table1->excludes(spec);
  app->add_option("--T", o->T, "Number of observations kept after burn-in")->required()->check(CLI::PositiveNumber);
  app->add_option("--c", o->c, "With --table1: n = c T")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--burn-in", o->burn_in, "Discarded initial observations (default 200 + 10 p)");
  app->add_option("--out", o->out, "Output prefix; writes <prefix>.csv, <prefix>.bin, <prefix>.manifest.json and, with --table1, <prefix>.spec.json")
      ->capture_default_str();
  app->add_option("--format", o->format, "Panel formats to write")
      ->check(CLI::IsMember({"csv", "bin", "both"}))
      ->capture_default_str();
  add_innovation_flags(*app, o->innovation);
  app->callback([o, &runner] {
    if (!o->table1 && o->spec_path.empty()) throw CLI::ValidationError("simulate", "one of --table1 or --spec is required");
    runner = [o](RunContext& ctx) { run_simulate(*o, ctx); };
  });
}

}  // namespace hdvar::cli
