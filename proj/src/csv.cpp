#include "csv.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <limits>

#include "balent/errors.hpp"

namespace balent::csv {

int Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading", path.string());

  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      table.header = split(line);
      have_header = true;
      continue;
    }
    Row row{line_no, split(line)};
    if (row.fields.size() != table.header.size()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields, got " + std::to_string(row.fields.size()));
    }
    table.rows.push_back(std::move(row));
  }
  if (in.bad()) throw IoError("read failed", path.string());
  if (!have_header) throw FormatError(path.string() + ": missing CSV header");
  return table;
}

double parse_real(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) {
    throw FormatError(path.string() + ":" + std::to_string(line) + ": not a number: '" + field + "'");
  }
  return value;
}

long long parse_integer(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const long long value = std::strtoll(field.c_str(), &end, 10);
  if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE) {
    throw FormatError(path.string() + ":" + std::to_string(line) + ": not an integer: '" + field + "'");
  }
  return value;
}

}  // namespace balent::csv
