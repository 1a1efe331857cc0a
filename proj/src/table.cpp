#include "rydpol/table.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rydpol/errors.hpp"

namespace rydpol {

std::string Table::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return {};
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw ConfigError("table has no column '" + name + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_table(const std::filesystem::path& file, const Table& table) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file.string());
  for (const auto& [k, v] : table.meta) out << "# " << k << ": " << v << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

Table read_table(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  Table t;
  std::string line;
  bool have_columns = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto colon = line.find(": ");
      if (colon != std::string::npos)
        t.meta.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    if (!have_columns) {
      while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
      have_columns = true;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(file.string() + ": non-numeric cell '" + cell + "'");
      }
    }
    if (row.size() != t.columns.size())
      throw ConfigError(file.string() + ": row width does not match header");
    t.rows.push_back(std::move(row));
  }
  if (!have_columns) throw ConfigError(file.string() + ": missing column header");
  return t;
}

}  // namespace rydpol
