#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace csde {

/// Writes to "<path>.tmp" and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Shortest round-trip representation; "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double value);

/// Parses the output of format_double (and ordinary decimal/scientific text).
double parse_double(std::string_view text);

/// Minimal CSV table: header on line 1, comma-separated, no quoting (fields
/// never contain commas).
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row);
  std::string str() const;
  void write(const std::filesystem::path& path) const { write_file_atomic(path, str()); }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  static CsvTable parse(std::string_view text);
  static CsvTable read(const std::filesystem::path& path) { return parse(read_file(path)); }

  /// Column index by name; throws std::out_of_range when absent.
  std::size_t column(std::string_view name) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace csde
