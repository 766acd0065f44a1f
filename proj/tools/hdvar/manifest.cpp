#include "manifest.hpp"

#include <hdvar/common.hpp>
#include <hdvar/version.hpp>

#include <ctime>
#include <fstream>
#include <iostream>
#include <iterator>

namespace hdvar::cli {

namespace {

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Fnv1a h;
  h.update(bytes);
  return to_hex(h.digest());
}

Manifest::Manifest(std::string subcommand, std::vector<std::string> argv, const GlobalOptions& global)
    : subcommand_(std::move(subcommand)),
      argv_(std::move(argv)),
      global_(global),
      start_(std::chrono::steady_clock::now()),
      started_at_(utc_now()) {}

void Manifest::add_input(const std::string& path) {
  inputs_.push_back({{"path", path}, {"fnv1a", file_digest(path)}});
}

void Manifest::add_output(const std::string& path) {
  outputs_.push_back({{"path", path}, {"fnv1a", file_digest(path)}});
}

void Manifest::emit(const std::string& path, int exit_code) const {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  nlohmann::json j = {{"schema_version", kManifestSchema},
                      {"tool", "hdvar"},
                      {"library_version", kVersion},
                      {"subcommand", subcommand_},
                      {"argv", argv_},
                      {"seed", global_.seed},
                      {"threads", global_.threads},
                      {"inputs", inputs_},
                      {"outputs", outputs_},
                      {"started_at", started_at_},
                      {"wall_time_seconds", wall},
                      {"exit_code", exit_code}};
  for (const auto& item : extra_.items()) j[item.key()] = item.value();
  if (path.empty()) {
    std::cerr << j.dump() << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) {
    std::cerr << "hdvar: cannot write manifest '" << path << "'\n";
    return;
  }
  out << j.dump(2) << '\n';
}

}  // namespace hdvar::cli
