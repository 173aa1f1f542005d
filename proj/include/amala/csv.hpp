#pragma once

#include <string>
#include <vector>

namespace amala::csv {

/// Fixed 17-significant-digit formatting; round-trips every double.
std::string fmt(double v);

/// Minimal reader: header row plus numeric-or-text cells, comma separated.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
Table read(const std::string& path);

}  // namespace amala::csv
