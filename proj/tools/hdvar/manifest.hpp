#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace hdvar::cli {

inline constexpr int kManifestSchema = 1;

struct GlobalOptions {
  std::uint64_t seed = 1;
  int threads = 1;
  int verbosity = 0;
  std::string manifest_path;  // empty: next to the primary output, or stderr
};

/// Run record written after every subcommand: inputs with content hashes,
/// outputs, seed, library version and wall time.
class Manifest {
 public:
  Manifest(std::string subcommand, std::vector<std::string> argv, const GlobalOptions& global);

  void add_input(const std::string& path);
  void add_output(const std::string& path);
  void set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }

  /// Writes to `path`, or to stderr as one JSON line when `path` is empty.
  void emit(const std::string& path, int exit_code) const;

 private:
  std::string subcommand_;
  std::vector<std::string> argv_;
  GlobalOptions global_;
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  nlohmann::json extra_ = nlohmann::json::object();
  std::chrono::steady_clock::time_point start_;
  std::string started_at_;
};

/// FNV-1a of the file contents, hex encoded; empty if unreadable.
std::string file_digest(const std::string& path);

}  // namespace hdvar::cli
