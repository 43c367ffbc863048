#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vpg {

/// A header-addressed CSV table. Lines starting with '#' before the header are
/// kept as comments; quoted fields follow RFC 4180.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
  std::size_t require_column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

/// Strict numeric cell; FormatError naming the column and 1-based row.
double parse_number(const std::string& cell, const char* column, std::size_t row);

std::string csv_escape(const std::string& field);
std::string csv_line(const std::vector<std::string>& fields);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace vpg
