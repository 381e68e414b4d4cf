// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pald::exp {

/// Minimal CSV builder: comma separated, no quoting (fields never contain
/// commas), shortest round-trip numbers.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& field(std::string_view s);
  CsvWriter& field(double v);
  CsvWriter& field(long long v);
  CsvWriter& field(unsigned long long v);
  CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
  CsvWriter& field(std::size_t v) { return field(static_cast<unsigned long long>(v)); }
  CsvWriter& field(const char* s) { return field(std::string_view(s)); }
  CsvWriter& field(bool v) { return field(std::string_view(v ? "true" : "false")); }
  /// Ends the current row; throws if its width differs from the header.
  void end_row();

  const std::string& str() const { return out_; }
  std::size_t rows() const { return rows_; }

 private:
  std::size_t width_;
  std::size_t current_ = 0;
  std::size_t rows_ = 0;
  std::string out_;
};

std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws FormatError when missing.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it over the target.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace pald::exp
