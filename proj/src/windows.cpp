#include "wristhar/windows.hpp"

#include <array>
#include <cmath>

#include "wristhar/csv.hpp"
#include "wristhar/errors.hpp"

namespace wristhar {

std::vector<Window> make_windows(const Recording& recording, const WindowOptions& options) {
  validate(recording);
  const double exact = options.duration_s * recording.sample_rate_hz;
  const double rounded = std::round(exact);
  if (!(options.duration_s > 0.0) || rounded < 1.0 || std::abs(exact - rounded) > 1e-6) {
    throw ConfigurationError("window duration " + csv::format_double(options.duration_s) +
                             " s is not a positive multiple of the sample period");
  }
  const auto length = static_cast<std::size_t>(rounded);
  std::vector<Window> out;
  for (std::size_t begin = 0; begin + length <= recording.size(); begin += length) {
    bool excluded = false;
    for (std::size_t i = begin; i < begin + length && !excluded; ++i) {
      excluded = recording.is_excluded(i);
    }
    if (excluded) continue;

    Window w;
    w.participant_id = recording.participant_id;
    w.start_time = recording.time_at(begin);
    w.duration_s = options.duration_s;
    w.sample_rate_hz = recording.sample_rate_hz;
    w.samples.assign(recording.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     recording.samples.begin() + static_cast<std::ptrdiff_t>(begin + length));
    if (recording.has_labels()) {
      std::array<std::size_t, kNumLabels> counts{};
      std::size_t annotated = 0;
      for (std::size_t i = begin; i < begin + length; ++i) {
        if (const MaybeLabel& l = recording.labels[i]) {
          ++counts[index_of(*l)];
          ++annotated;
        }
      }
      std::size_t best = 0;
      for (std::size_t c = 1; c < kNumLabels; ++c) {
        if (counts[c] > counts[best]) best = c;
      }
      const double n = static_cast<double>(length);
      w.label_coverage = static_cast<double>(counts[best]) / n;
      if (annotated > 0 && static_cast<double>(annotated) / n >= options.min_annotated_fraction) {
        w.label = label_from_index(best);
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

void write_windows(const std::filesystem::path& index_path,
                   const std::filesystem::path& samples_path, const std::vector<Window>& windows) {
  std::string index = "pid,start_time,duration_s,sample_rate_hz,label,coverage\n";
  std::string samples = "window,x,y,z\n";
  const bool with_samples = !samples_path.empty();
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const Window& win = windows[w];
    index += csv::escape(win.participant_id) + "," + csv::format_double(win.start_time) + "," +
             csv::format_double(win.duration_s) + "," + csv::format_double(win.sample_rate_hz) +
             "," + (win.label ? std::string(label_name(*win.label)) : std::string()) + "," +
             csv::format_double(win.label_coverage) + "\n";
    if (!with_samples) continue;
    const std::string prefix = std::to_string(w) + ",";
    for (const Accel& a : win.samples) {
      samples += prefix + csv::format_double(a.x) + "," + csv::format_double(a.y) + "," +
                 csv::format_double(a.z) + "\n";
    }
  }
  csv::write_file(index_path, index);
  if (with_samples) csv::write_file(samples_path, samples);
}

std::vector<Window> read_windows(const std::filesystem::path& index_path,
                                 const std::filesystem::path& samples_path) {
  std::vector<Window> out;
  {
    const std::string content = csv::read_file(index_path);
    csv::Cursor cursor(content);
    std::vector<std::string> f;
    if (!cursor.next(f)) throw EmptyInputError("window index is empty");
    while (cursor.next(f)) {
      if (f.size() < 6) throw SchemaError("window index line is short");
      Window w;
      w.participant_id = f[0];
      w.start_time = csv::parse_double(f[1], "start_time");
      w.duration_s = csv::parse_double(f[2], "duration_s");
      w.sample_rate_hz = csv::parse_double(f[3], "sample_rate_hz");
      w.label = parse_maybe_label(f[4]);
      w.label_coverage = csv::parse_double(f[5], "coverage");
      out.push_back(std::move(w));
    }
  }
  const std::string content = csv::read_file(samples_path);
  csv::Cursor cursor(content);
  std::vector<std::string> f;
  if (!cursor.next(f)) throw EmptyInputError("window sample file is empty");
  while (cursor.next(f)) {
    if (f.size() < 4) throw SchemaError("window sample line is short");
    const auto w = static_cast<std::size_t>(csv::parse_int(f[0], "window"));
    if (w >= out.size()) throw SchemaError("sample row references unknown window");
    out[w].samples.push_back({csv::parse_double(f[1], "x"), csv::parse_double(f[2], "y"),
                              csv::parse_double(f[3], "z")});
  }
  return out;
}

}  // namespace wristhar
