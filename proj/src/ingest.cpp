#include "wristhar/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "wristhar/csv.hpp"
#include "wristhar/errors.hpp"

namespace wristhar {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (Hinnant's algorithm).
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2 ? 1 : 0;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

bool read_digits(std::string_view s, std::size_t& pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  pos += count;
  return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

double parse_iso8601(std::string_view text) {
  const auto fail = [&]() -> double {
    throw ParseError("invalid ISO-8601 timestamp '" + std::string(text) + "'");
  };
  std::size_t pos = 0;
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!read_digits(text, pos, 4, year) || !expect(text, pos, '-') ||
      !read_digits(text, pos, 2, month) || !expect(text, pos, '-') ||
      !read_digits(text, pos, 2, day)) {
    return fail();
  }
  if (month < 1 || month > 12 || day < 1 || day > 31) return fail();
  double fraction = 0.0;
  if (pos < text.size()) {
    if (text[pos] != 'T' && text[pos] != ' ') return fail();
    ++pos;
    if (!read_digits(text, pos, 2, hour) || !expect(text, pos, ':') ||
        !read_digits(text, pos, 2, minute)) {
      return fail();
    }
    if (expect(text, pos, ':') && !read_digits(text, pos, 2, second)) return fail();
    if (pos < text.size() && (text[pos] == '.' || text[pos] == ',')) {
      ++pos;
      double scale = 0.1;
      const std::size_t start = pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
        fraction += (text[pos] - '0') * scale;
        scale *= 0.1;
        ++pos;
      }
      if (pos == start) return fail();
    }
  }
  if (hour > 23 || minute > 59 || second > 60) return fail();
  long long offset_s = 0;
  if (pos < text.size()) {
    if (text[pos] == 'Z' || text[pos] == 'z') {
      ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
      const int sign = text[pos] == '-' ? -1 : 1;
      ++pos;
      int oh = 0, om = 0;
      if (!read_digits(text, pos, 2, oh)) return fail();
      expect(text, pos, ':');
      if (pos < text.size() && !read_digits(text, pos, 2, om)) return fail();
      offset_s = sign * (oh * 3600LL + om * 60LL);
    }
  }
  if (pos != text.size()) return fail();
  const long long days = days_from_civil(year, static_cast<unsigned>(month),
                                         static_cast<unsigned>(day));
  const long long whole = days * 86400LL + hour * 3600LL + minute * 60LL + second - offset_s;
  return static_cast<double>(whole) + fraction;
}

bool looks_numeric(std::string_view text) {
  bool digit = false;
  for (char c : text) {
    if (c >= '0' && c <= '9') {
      digit = true;
    } else if (c != '.' && c != '-' && c != '+' && c != ' ' && c != 'e' && c != 'E') {
      return false;
    }
  }
  return digit;
}

}  // namespace

TimeFormat parse_time_format(std::string_view text) {
  const std::string name = normalize_annotation(text);
  if (name == "auto") return TimeFormat::Auto;
  if (name == "epoch_ms" || name == "epoch-ms" || name == "ms") return TimeFormat::EpochMillis;
  if (name == "iso8601" || name == "iso-8601" || name == "iso") return TimeFormat::Iso8601;
  throw ParseError("unknown time format '" + std::string(text) + "'");
}

double parse_timestamp(std::string_view text, TimeFormat format) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (format == TimeFormat::Auto) {
    format = looks_numeric(text) ? TimeFormat::EpochMillis : TimeFormat::Iso8601;
  }
  if (format == TimeFormat::EpochMillis) return csv::parse_double(text, "time (ms)") / 1000.0;
  return parse_iso8601(text);
}

std::string format_epoch_millis(double seconds) {
  return std::to_string(std::llround(seconds * 1000.0));
}

Recording parse_recording_csv(std::string_view content, const CsvSchema& schema,
                              std::string participant_id) {
  csv::Cursor cursor(content);
  std::vector<std::string> fields;
  if (!cursor.next(fields)) throw EmptyInputError("recording file is empty");
  const std::vector<std::string> header = fields;
  const auto col_t = csv::find_column(header, schema.time_column);
  const auto col_x = csv::find_column(header, schema.x_column);
  const auto col_y = csv::find_column(header, schema.y_column);
  const auto col_z = csv::find_column(header, schema.z_column);
  const auto col_a = csv::find_column(header, schema.annotation_column);
  for (const auto& [col, name] : {std::pair{col_t, &schema.time_column},
                                  std::pair{col_x, &schema.x_column},
                                  std::pair{col_y, &schema.y_column},
                                  std::pair{col_z, &schema.z_column}}) {
    if (col == std::string_view::npos) throw SchemaError("missing column '" + *name + "'");
  }
  const bool has_annotation = col_a != std::string_view::npos;
  const std::size_t needed = std::max({col_t, col_x, col_y, col_z}) + 1;

  Recording rec;
  rec.participant_id = std::move(participant_id);
  std::vector<double> times;
  while (cursor.next(fields)) {
    if (fields.size() < needed) {
      throw SchemaError("line " + std::to_string(cursor.line_number()) + " has " +
                        std::to_string(fields.size()) + " fields, expected at least " +
                        std::to_string(needed));
    }
    const double t = parse_timestamp(fields[col_t], schema.time_format);
    if (!times.empty() && !(t > times.back())) {
      throw OrderingError("timestamps not strictly increasing at line " +
                          std::to_string(cursor.line_number()));
    }
    times.push_back(t);
    rec.samples.push_back({csv::parse_double(fields[col_x], "x"),
                           csv::parse_double(fields[col_y], "y"),
                           csv::parse_double(fields[col_z], "z")});
    if (has_annotation) {
      rec.annotations.push_back(col_a < fields.size() ? std::move(fields[col_a]) : std::string());
    }
  }
  if (rec.samples.empty()) throw EmptyInputError("recording file has no data rows");
  if (rec.samples.size() < 2) {
    throw InsufficientDataError("cannot infer a sample rate from a single sample");
  }

  std::vector<double> gaps(times.size() - 1);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) gaps[i] = times[i + 1] - times[i];
  std::vector<double> sorted = gaps;
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  double median = *mid;
  if (sorted.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(sorted.begin(), mid));
  }
  rec.t0 = times.front();
  rec.sample_rate_hz = 1.0 / median;

  if (schema.resample_hz) return resample_timed(rec, times, *schema.resample_hz);
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (std::abs(gaps[i] - median) > 0.01 * median) {
      throw IrregularSamplingError("gap of " + csv::format_double(gaps[i]) +
                                   " s after sample " + std::to_string(i) +
                                   " deviates from the median gap " + csv::format_double(median) +
                                   " s by more than 1%");
    }
  }
  return rec;
}

Recording read_recording_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  try {
    return parse_recording_csv(csv::read_file(path), schema, path.stem().string());
  } catch (const Error& e) {
    // Preserve the concrete type while adding the file name.
    const std::string where = path.filename().string() + ": ";
    if (dynamic_cast<const SchemaError*>(&e)) throw SchemaError(where + e.what());
    if (dynamic_cast<const OrderingError*>(&e)) throw OrderingError(where + e.what());
    if (dynamic_cast<const EmptyInputError*>(&e)) throw EmptyInputError(where + e.what());
    if (dynamic_cast<const IrregularSamplingError*>(&e)) {
      throw IrregularSamplingError(where + e.what());
    }
    if (dynamic_cast<const ParseError*>(&e)) throw ParseError(where + e.what());
    throw;
  }
}

void write_recording_csv(const std::filesystem::path& path, const Recording& recording,
                         int decimals) {
  validate(recording);
  std::string out = recording.has_annotations() ? "time,x,y,z,annotation\n" : "time,x,y,z\n";
  out.reserve(recording.size() * 48);
  const long long t0_ms = std::llround(recording.t0 * 1000.0);
  for (std::size_t i = 0; i < recording.size(); ++i) {
    const auto& s = recording.samples[i];
    out += std::to_string(t0_ms + std::llround(static_cast<double>(i) * 1000.0 /
                                               recording.sample_rate_hz));
    out += ',';
    out += csv::format_fixed(s.x, decimals);
    out += ',';
    out += csv::format_fixed(s.y, decimals);
    out += ',';
    out += csv::format_fixed(s.z, decimals);
    if (recording.has_annotations()) {
      out += ',';
      out += csv::escape(recording.annotations[i]);
    }
    out += '\n';
  }
  csv::write_file(path, out);
}

void LabelMapping::add(std::string_view raw, IntensityLabel label) {
  std::string key = normalize_annotation(raw);
  const auto [it, inserted] = table_.emplace(key, label);
  if (!inserted && it->second != label) {
    throw ConflictError("annotation '" + key + "' maps to both " +
                        std::string(label_name(it->second)) + " and " +
                        std::string(label_name(label)));
  }
}

std::optional<IntensityLabel> LabelMapping::lookup(std::string_view raw) const {
  const auto it = table_.find(normalize_annotation(raw));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

LabelMapping parse_label_mapping(std::string_view content) {
  csv::Cursor cursor(content);
  std::vector<std::string> fields;
  if (!cursor.next(fields)) throw EmptyInputError("label mapping is empty");
  const auto col_a = csv::find_column(fields, "annotation");
  const auto col_l = csv::find_column(fields, "label");
  if (col_a == std::string_view::npos || col_l == std::string_view::npos) {
    throw SchemaError("label mapping header must be 'annotation,label'");
  }
  LabelMapping mapping;
  while (cursor.next(fields)) {
    if (fields.size() <= std::max(col_a, col_l)) {
      throw SchemaError("label mapping line " + std::to_string(cursor.line_number()) +
                        " is short");
    }
    try {
      mapping.add(fields[col_a], parse_label(fields[col_l]));
    } catch (const ParseError& e) {
      throw ParseError("label mapping line " + std::to_string(cursor.line_number()) + ": " +
                       e.what());
    }
  }
  return mapping;
}

LabelMapping load_label_mapping(const std::filesystem::path& path) {
  return parse_label_mapping(csv::read_file(path));
}

void write_label_mapping(const std::filesystem::path& path, const LabelMapping& mapping) {
  std::string out = "annotation,label\n";
  for (const auto& [raw, label] : mapping.entries()) {
    out += csv::escape(raw) + "," + std::string(label_name(label)) + "\n";
  }
  csv::write_file(path, out);
}

Recording map_annotations(const Recording& recording, const LabelMapping& mapping) {
  if (!recording.has_annotations()) throw InputError("recording has no annotations to map");
  Recording out = recording;
  out.labels.assign(recording.size(), std::nullopt);
  for (std::size_t i = 0; i < recording.size(); ++i) {
    const std::string& raw = recording.annotations[i];
    if (normalize_annotation(raw).empty()) continue;
    const auto label = mapping.lookup(raw);
    if (!label) throw UnmappedAnnotationError("unmapped annotation '" + raw + "'");
    out.labels[i] = *label;
  }
  return out;
}

namespace {

// Shared kernel: `position(k)` returns the fractional source index for grid
// point k; the caller guarantees it lies within [0, n-1].
template <typename PositionFn>
Recording resample_grid(const Recording& src, double target_hz, std::size_t count,
                        PositionFn position) {
  Recording out;
  out.participant_id = src.participant_id;
  out.sample_rate_hz = target_hz;
  out.t0 = src.t0;
  out.samples.resize(count);
  if (src.has_annotations()) out.annotations.resize(count);
  if (src.has_labels()) out.labels.resize(count);
  if (!src.excluded.empty()) out.excluded.resize(count);
  const std::size_t last = src.size() - 1;
  for (std::size_t k = 0; k < count; ++k) {
    double pos = position(k);
    const double rounded = std::round(pos);
    if (std::abs(pos - rounded) < 1e-9) pos = rounded;
    pos = std::clamp(pos, 0.0, static_cast<double>(last));
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    const std::size_t hi = std::min(lo + 1, last);
    const Accel& a = src.samples[lo];
    if (frac == 0.0) {
      out.samples[k] = a;
    } else {
      const Accel& b = src.samples[hi];
      out.samples[k] = {a.x + frac * (b.x - a.x), a.y + frac * (b.y - a.y),
                        a.z + frac * (b.z - a.z)};
    }
    const std::size_t nearest = frac <= 0.5 ? lo : hi;
    if (src.has_annotations()) out.annotations[k] = src.annotations[nearest];
    if (src.has_labels()) out.labels[k] = src.labels[nearest];
    if (!src.excluded.empty()) out.excluded[k] = src.excluded[nearest];
  }
  return out;
}

}  // namespace

Recording resample(const Recording& recording, double target_hz) {
  if (!(target_hz > 0.0) || !std::isfinite(target_hz)) {
    throw ConfigurationError("target rate must be positive");
  }
  if (recording.size() < 2) throw InsufficientDataError("resampling needs at least 2 samples");
  validate(recording);
  const double ratio = recording.sample_rate_hz / target_hz;
  const double span_in_target =
      static_cast<double>(recording.size() - 1) * target_hz / recording.sample_rate_hz;
  const auto count = static_cast<std::size_t>(std::floor(span_in_target + 1e-9)) + 1;
  if (ratio == 1.0) {
    return resample_grid(recording, target_hz, count,
                         [](std::size_t k) { return static_cast<double>(k); });
  }
  return resample_grid(recording, target_hz, count, [&](std::size_t k) {
    return static_cast<double>(k) * recording.sample_rate_hz / target_hz;
  });
}

Recording resample_timed(const Recording& recording, const std::vector<double>& times,
                         double target_hz) {
  if (!(target_hz > 0.0) || !std::isfinite(target_hz)) {
    throw ConfigurationError("target rate must be positive");
  }
  if (recording.size() < 2) throw InsufficientDataError("resampling needs at least 2 samples");
  if (times.size() != recording.size()) throw InputError("times and samples differ in length");
  const double t0 = times.front();
  const auto count =
      static_cast<std::size_t>(std::floor((times.back() - t0) * target_hz + 1e-9)) + 1;
  std::size_t j = 0;
  Recording out = resample_grid(recording, target_hz, count, [&](std::size_t k) {
    const double t = t0 + static_cast<double>(k) / target_hz;
    while (j + 2 < times.size() && times[j + 1] <= t) ++j;
    const double span = times[j + 1] - times[j];
    return static_cast<double>(j) + std::clamp((t - times[j]) / span, 0.0, 1.0);
  });
  out.t0 = t0;
  return out;
}

std::vector<SubjectMeta> load_subject_meta(const std::filesystem::path& path) {
  const std::string content = csv::read_file(path);
  csv::Cursor cursor(content);
  std::vector<std::string> fields;
  if (!cursor.next(fields)) throw EmptyInputError("metadata file is empty");
  const auto col_p = csv::find_column(fields, "pid");
  const auto col_a = csv::find_column(fields, "age_band");
  const auto col_s = csv::find_column(fields, "sex");
  if (col_p == std::string_view::npos || col_a == std::string_view::npos ||
      col_s == std::string_view::npos) {
    throw SchemaError("metadata header must be 'pid,age_band,sex'");
  }
  std::vector<SubjectMeta> out;
  while (cursor.next(fields)) {
    if (fields.size() <= std::max({col_p, col_a, col_s})) {
      throw SchemaError("metadata line " + std::to_string(cursor.line_number()) + " is short");
    }
    out.push_back({fields[col_p], parse_age_band(fields[col_a]), parse_sex(fields[col_s])});
  }
  return out;
}

void write_subject_meta(const std::filesystem::path& path, const std::vector<SubjectMeta>& meta) {
  std::string out = "pid,age_band,sex\n";
  for (const auto& m : meta) {
    out += csv::escape(m.participant_id) + "," + std::string(age_band_name(m.age_band)) + "," +
           std::string(sex_name(m.sex)) + "\n";
  }
  csv::write_file(path, out);
}

}  // namespace wristhar
