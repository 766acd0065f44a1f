#pragma once

#include "manifest.hpp"

#include <hdvar/dgp.hpp>

#include <CLI11.hpp>

#include <functional>
#include <string>

namespace hdvar::cli {

struct RunContext {
  GlobalOptions global;
  bool seed_given = false;
  bool threads_given = false;
  Manifest* manifest = nullptr;
  std::string manifest_path;  // set by the command once its outputs are known
};

using Runner = std::function<void(RunContext&)>;

// Each registers a subcommand and stores its action in `runner` when selected.
void add_simulate(CLI::App& root, Runner& runner);
void add_fit(CLI::App& root, Runner& runner);
void add_diagnose(CLI::App& root, Runner& runner);
void add_experiment(CLI::App& root, Runner& runner);
void add_bounds(CLI::App& root, Runner& runner);

/// Innovation process flags shared by simulate and diagnose.
struct InnovationFlags {
  std::string kind;  // "gaussian" or "stochastic"; empty picks the command default
  double sigma_diag = 1.0;
  double c0_diag = 1e-5;
  double psi_diag = 0.8;
};

void add_innovation_flags(CLI::App& app, InnovationFlags& flags);
InnovationSpec make_innovation(const InnovationFlags& flags, int n, const std::string& default_kind);

/// Writes pretty JSON to `path`, or to stdout when `path` is empty or "-".
void write_json(const nlohmann::json& j, const std::string& path);

nlohmann::json read_json_file(const std::string& path);

/// "<path>.manifest.json", or "" for stdout outputs.
std::string manifest_next_to(const std::string& path);

}  // namespace hdvar::cli
