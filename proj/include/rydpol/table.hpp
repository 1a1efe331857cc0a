#pragma once

// Headered CSV: "# key: value" metadata lines, one column-name line, then
// numeric rows printed with %.17g so that a read returns identical doubles.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace rydpol {

struct Table {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string meta_value(const std::string& key) const;  // "" when absent
  std::size_t column(const std::string& name) const;     // throws ConfigError
};

std::string format_double(double v);
void write_table(const std::filesystem::path& file, const Table& table);
Table read_table(const std::filesystem::path& file);

}  // namespace rydpol
