#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace wristhar::csv {

/// Reads a whole file into memory. Throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes content, creating parent directories. Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Minimal RFC-4180 reader over an in-memory buffer: quoted fields, doubled
/// quotes, CRLF. Blank lines are skipped.
class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  /// Fills `fields` with the next record. Returns false at end of input.
  bool next(std::vector<std::string>& fields);

  /// 1-based line number of the record most recently returned.
  std::size_t line_number() const { return record_line_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

/// Index of `name` in a header row, or npos.
std::size_t find_column(const std::vector<std::string>& header, std::string_view name);

/// Strict decimal parse of the whole field (surrounding spaces allowed).
/// Throws ParseError mentioning `what` on failure.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

/// Shortest representation that round-trips exactly.
std::string format_double(double value);

/// Fixed number of decimals, for human-facing outputs.
std::string format_fixed(double value, int decimals);

/// Quotes the field when it contains a delimiter, quote or newline.
std::string escape(std::string_view field);

}  // namespace wristhar::csv
