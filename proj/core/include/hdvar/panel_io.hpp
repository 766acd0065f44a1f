#pragma once

#include <hdvar/dgp.hpp>

#include <string>

namespace hdvar {

/// CSV with header y1..yn, one row per t, values printed with %.17g so the
/// text round-trips to the same doubles.
void write_panel_csv(const TimeSeriesPanel& panel, const std::string& path);
TimeSeriesPanel read_panel_csv(const std::string& path);

/// Binary layout: uint64 T, uint64 n (little-endian), then T*n little-endian
/// IEEE doubles in row-major order.
void write_panel_binary(const TimeSeriesPanel& panel, const std::string& path);
TimeSeriesPanel read_panel_binary(const std::string& path);

/// Dispatches on the extension: ".bin" is binary, anything else CSV.
TimeSeriesPanel read_panel(const std::string& path);

}  // namespace hdvar
