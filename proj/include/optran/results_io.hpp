#pragma once

#include <string>
#include <vector>

namespace optran {

/// Doubles in results files carry 12 significant digits.
std::string fmt_sig12(double v);

/// Minimal CSV table with a mandatory header and deterministic row order
/// (insertion order).
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> cells);
  std::string to_string() const;
  void write_file(const std::string& path) const;

  size_t row_count() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace optran
