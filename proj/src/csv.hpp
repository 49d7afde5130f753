#pragma once

// Minimal comma-separated reader shared by the file formats. No quoting: every
// file this project emits is purely numeric apart from the header.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace balent::csv {

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Column index of `name`, or -1.
  int column(std::string_view name) const;
};

std::vector<std::string> split(std::string_view line);

/// Throws IoError when unreadable, FormatError on ragged rows or a missing header.
Table read(const std::filesystem::path& path);

double parse_real(const std::string& field, const std::filesystem::path& path, std::size_t line);
long long parse_integer(const std::string& field, const std::filesystem::path& path, std::size_t line);

}  // namespace balent::csv
