#include <hdvar/panel_io.hpp>

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <vector>

namespace hdvar {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

void put_u64(std::ofstream& out, std::uint64_t v) {
  v = to_le(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return to_le(v);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void write_panel_csv(const TimeSeriesPanel& panel, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
  const int n = panel.n();
  for (int j = 0; j < n; ++j) std::fprintf(f, j ? ",y%d" : "y%d", j + 1);
  std::fputc('\n', f);
  for (int t = 0; t < panel.T(); ++t) {
    for (int j = 0; j < n; ++j) std::fprintf(f, j ? ",%.17g" : "%.17g", panel.data(t, j));
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw NumericalError("write failed for '" + path + "'");
}

TimeSeriesPanel read_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open panel file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("panel file '" + path + "' is empty");
  int n = 1;
  for (const char ch : line) n += ch == ',';
  std::vector<double> values;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const char* s = line.c_str();
    for (int j = 0; j < n; ++j) {
      char* end = nullptr;
      const double v = std::strtod(s, &end);
      if (end == s) throw ValidationError("panel file '" + path + "': bad number on data row " + std::to_string(rows + 1));
      values.push_back(v);
      s = end;
      if (j + 1 < n) {
        if (*s != ',') throw ValidationError("panel file '" + path + "': row " + std::to_string(rows + 1) +
                                             " has fewer than " + std::to_string(n) + " columns");
        ++s;
      }
    }
    while (*s == ' ' || *s == '\r') ++s;
    if (*s != '\0') throw ValidationError("panel file '" + path + "': row " + std::to_string(rows + 1) +
                                          " has more than " + std::to_string(n) + " columns");
    ++rows;
  }
  if (rows == 0) throw ValidationError("panel file '" + path + "' has no data rows");
  TimeSeriesPanel panel;
  panel.data = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, n);
  require(panel.data.allFinite(), "panel file '" + path + "' contains non-finite values");
  return panel;
}

void write_panel_binary(const TimeSeriesPanel& panel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  put_u64(out, static_cast<std::uint64_t>(panel.T()));
  put_u64(out, static_cast<std::uint64_t>(panel.n()));
  for (int t = 0; t < panel.T(); ++t)
    for (int j = 0; j < panel.n(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(panel.data(t, j)));
  if (!out) throw NumericalError("write failed for '" + path + "'");
}

TimeSeriesPanel read_panel_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open panel file '" + path + "'");
  const std::uint64_t T = get_u64(in);
  const std::uint64_t n = get_u64(in);
  if (!in || T == 0 || n == 0 || T > (1ULL << 32) || n > (1ULL << 32))
    throw ValidationError("panel file '" + path + "': bad binary header");
  TimeSeriesPanel panel;
  panel.data.resize(static_cast<Index>(T), static_cast<Index>(n));
  for (std::uint64_t t = 0; t < T; ++t)
    for (std::uint64_t j = 0; j < n; ++j)
      panel.data(static_cast<Index>(t), static_cast<Index>(j)) = std::bit_cast<double>(get_u64(in));
  if (!in) throw ValidationError("panel file '" + path + "' is truncated");
  require(panel.data.allFinite(), "panel file '" + path + "' contains non-finite values");
  return panel;
}

TimeSeriesPanel read_panel(const std::string& path) {
  return ends_with(path, ".bin") ? read_panel_binary(path) : read_panel_csv(path);
}

}  // namespace hdvar
