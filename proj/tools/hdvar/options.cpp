#include "commands.hpp"

#include <fstream>
#include <iostream>

namespace hdvar::cli {

void add_innovation_flags(CLI::App& app, InnovationFlags& flags) {
  app.add_option("--innovation", flags.kind, "Innovation law: gaussian (Sigma = s I) or stochastic (H_{t+1} = C0 + Psi H_t Psi' + ee')")
      ->check(CLI::IsMember({"gaussian", "stochastic"}));
  app.add_option("--sigma-diag", flags.sigma_diag, "Gaussian innovations: diagonal of Sigma")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--c0-diag", flags.c0_diag, "Stochastic covariance: diagonal of C0")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--psi-diag", flags.psi_diag, "Stochastic covariance: diagonal of Psi (|psi| < 1)")
      ->capture_default_str();
}

InnovationSpec make_innovation(const InnovationFlags& flags, int n, const std::string& default_kind) {
  const std::string kind = flags.kind.empty() ? default_kind : flags.kind;
  if (kind == "gaussian") return InnovationSpec::gaussian(flags.sigma_diag * Matrix::Identity(n, n));
  return InnovationSpec::stochastic_covariance(flags.c0_diag * Matrix::Identity(n, n),
                                               flags.psi_diag * Matrix::Identity(n, n));
}

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw NumericalError("write failed for '" + path + "'");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string manifest_next_to(const std::string& path) {
  if (path.empty() || path == "-") return {};
  return path + ".manifest.json";
}

}  // namespace hdvar::cli
