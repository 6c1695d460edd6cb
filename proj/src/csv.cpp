#include "wristhar/csv.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wristhar/errors.hpp"

namespace wristhar::csv {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

bool Cursor::next(std::vector<std::string>& fields) {
  fields.clear();
  // Skip blank lines.
  while (pos_ < text_.size() && (text_[pos_] == '\n' || text_[pos_] == '\r')) {
    if (text_[pos_] == '\n') ++line_;
    ++pos_;
  }
  if (pos_ >= text_.size()) return false;
  record_line_ = line_;

  std::string field;
  bool in_quotes = false;
  while (pos_ < text_.size()) {
    const char c = text_[pos_];
    if (in_quotes) {
      if (c == '"') {
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
          field.push_back('"');
          pos_ += 2;
          continue;
        }
        in_quotes = false;
      } else {
        if (c == '\n') ++line_;
        field.push_back(c);
      }
      ++pos_;
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      ++pos_;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      ++pos_;
    } else if (c == '\n' || c == '\r') {
      break;
    } else {
      std::size_t stop = text_.find_first_of(",\"\n\r", pos_);
      if (stop == std::string_view::npos) stop = text_.size();
      field.append(text_.substr(pos_, stop - pos_));
      pos_ = stop;
    }
  }
  fields.push_back(std::move(field));
  return true;
}

std::size_t find_column(const std::vector<std::string>& header, std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string_view h = header[i];
    while (!h.empty() && (h.front() == ' ' || h.front() == '\t')) h.remove_prefix(1);
    while (!h.empty() && (h.back() == ' ' || h.back() == '\t')) h.remove_suffix(1);
    // Tolerate a UTF-8 byte-order mark on the first header cell.
    if (i == 0 && h.starts_with("\xEF\xBB\xBF")) h.remove_prefix(3);
    if (h == name) return i;
  }
  return std::string_view::npos;
}

namespace {
std::string_view trim(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  return text;
}
}  // namespace

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("invalid number '" + std::string(text) + "' for " + std::string(what));
  }
  return value;
}

long long parse_int(std::string_view text, std::string_view what) {
  text = trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("invalid integer '" + std::string(text) + "' for " + std::string(what));
  }
  return value;
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string format_fixed(double value, int decimals) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                       std::chars_format::fixed, decimals);
  return std::string(buf.data(), ptr);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace wristhar::csv
