#include "vpg/csv.hpp"

#include <fstream>
#include <stdexcept>
#include <sstream>

#include "vpg/error.hpp"

namespace vpg {

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::size_t CsvTable::require_column(const std::string& name) const {
  auto c = column(name);
  if (!c) fail(ErrorCode::FormatError, "CSV is missing column '" + name + "'");
  return *c;
}

namespace {

std::vector<std::string> split_record(const std::string& text, std::size_t& pos) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  while (pos < text.size()) {
    char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      ++pos;
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
      ++pos;
      fields.push_back(std::move(field));
      return fields;
    } else {
      field.push_back(c);
    }
    ++pos;
  }
  if (quoted) fail(ErrorCode::FormatError, "unterminated quoted CSV field");
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    if (!have_header && text[pos] == '#') {
      std::size_t end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(pos, end - pos);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      table.comments.push_back(line);
      pos = end + 1;
      continue;
    }
    auto fields = split_record(text, pos);
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != table.header.size())
        fail(ErrorCode::FormatError,
             "CSV row has " + std::to_string(fields.size()) + " fields, header has " +
                 std::to_string(table.header.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_text_file(path));
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorCode::IoError, "cannot create directory for '" + path.string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

double parse_number(const std::string& cell, const char* column, std::size_t row) {
  const auto b = cell.find_first_not_of(" \t\r");
  const auto e = cell.find_last_not_of(" \t\r");
  const std::string t = b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::FormatError, "row " + std::to_string(row) + ": column '" + column + "' is not a number: '" + t + "'");
}

}  // namespace vpg
