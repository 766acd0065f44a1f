#include "commands.hpp"

#include <hdvar/common.hpp>
#include <hdvar/version.hpp>

#include <iostream>

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace hdvar::cli;

  CLI::App app{"Sparse VAR estimation by equation-wise lasso: simulation, fitting, diagnostics and Monte Carlo studies."};
  app.set_version_flag("--version", std::string(hdvar::kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  RunContext ctx;
  auto* seed_opt = app.add_option("--seed", ctx.global.seed, "Base seed for every random stream")->capture_default_str();
  auto* threads_opt =
      app.add_option("--threads", ctx.global.threads, "Worker threads (0 = hardware concurrency); output does not depend on it")
          ->check(CLI::NonNegativeNumber)
          ->capture_default_str();
  app.add_flag("-v,--verbose", ctx.global.verbosity, "Progress messages on stderr (repeat for more)");
  app.add_option("--manifest", ctx.global.manifest_path,
                 "Manifest path (default: next to the primary output, or stderr for stdout output)");

  Runner runner;
  add_simulate(app, runner);
  add_fit(app, runner);
  add_diagnose(app, runner);
  add_experiment(app, runner);
  add_bounds(app, runner);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  ctx.seed_given = seed_opt->count() > 0;
  ctx.threads_given = threads_opt->count() > 0;

  std::vector<std::string> args(argv, argv + argc);
  const auto* sub = app.get_subcommands().front();
  Manifest manifest(sub->get_name(), args, ctx.global);
  ctx.manifest = &manifest;

  int code = 0;
  try {
    runner(ctx);
  } catch (const hdvar::ValidationError& e) {
    std::cerr << "hdvar " << sub->get_name() << ": " << e.what() << '\n';
    code = kExitValidation;
  } catch (const hdvar::NumericalError& e) {
    std::cerr << "hdvar " << sub->get_name() << ": numerical failure: " << e.what() << '\n';
    code = kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "hdvar " << sub->get_name() << ": " << e.what() << '\n';
    code = kExitNumerical;
  }
  manifest.emit(ctx.global.manifest_path.empty() ? ctx.manifest_path : ctx.global.manifest_path, code);
  return code;
}
