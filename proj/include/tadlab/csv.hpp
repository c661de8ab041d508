#pragma once

#include <string>
#include <vector>

namespace tadlab {

/// Comma-separated table with a header row.  Cells are written verbatim, so
/// callers format numbers with csv_num / csv_sci.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> h) : header(std::move(h)) {}
  void add(std::vector<std::string> row);
  std::string str() const;
};

/// Round-trip decimal (%.17g).
std::string csv_num(double v);
/// Scientific with 10 digits, used for rates.
std::string csv_sci(double v);
std::string csv_int(long long v);

/// Writes to a sibling temp file and renames it over path, so readers never
/// see a partial file.  Creates missing parent directories.
void write_file_atomic(const std::string& path, const std::string& content);
void write_csv(const std::string& path, const CsvTable& t);

}  // namespace tadlab
