#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wristhar/labels.hpp"
#include "wristhar/recording.hpp"

namespace wristhar {

enum class TimeFormat {
  Auto,         // plain number → epoch milliseconds, otherwise ISO-8601
  EpochMillis,  // decimal milliseconds since the Unix epoch
  Iso8601,      // YYYY-MM-DD[T ]hh:mm:ss[.fff][Z|±hh:mm]; no zone means UTC
};

TimeFormat parse_time_format(std::string_view text);

/// Seconds since the Unix epoch. Throws ParseError.
double parse_timestamp(std::string_view text, TimeFormat format);

/// Milliseconds since the epoch, rounded to the nearest integer.
std::string format_epoch_millis(double seconds);

struct CsvSchema {
  std::string time_column = "time";
  std::string x_column = "x";
  std::string y_column = "y";
  std::string z_column = "z";
  std::string annotation_column = "annotation";  // optional in the file
  TimeFormat time_format = TimeFormat::Auto;
  // When set, irregular input is accepted and resampled onto this rate.
  std::optional<double> resample_hz;
};

/// Reads a recording CSV. The participant id defaults to the file stem.
/// The sample rate is the reciprocal of the median inter-sample gap; any gap
/// deviating from the median by more than 1% raises IrregularSamplingError
/// unless schema.resample_hz is set.
Recording read_recording_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

Recording parse_recording_csv(std::string_view content, const CsvSchema& schema,
                              std::string participant_id);

/// Writes `time` as epoch milliseconds with x/y/z at `decimals` places, plus
/// an `annotation` column when the recording carries raw annotations.
void write_recording_csv(const std::filesystem::path& path, const Recording& recording,
                         int decimals = 6);

/// Raw annotation → intensity. Keys are stored normalized (trim + case-fold).
class LabelMapping {
 public:
  /// Throws ConflictError if `raw` already maps to a different label.
  void add(std::string_view raw, IntensityLabel label);
  std::optional<IntensityLabel> lookup(std::string_view raw) const;
  std::size_t size() const { return table_.size(); }
  const std::map<std::string, IntensityLabel>& entries() const { return table_; }

 private:
  std::map<std::string, IntensityLabel> table_;
};

/// Reads the two-column `annotation,label` table.
LabelMapping load_label_mapping(const std::filesystem::path& path);
LabelMapping parse_label_mapping(std::string_view content);
void write_label_mapping(const std::filesystem::path& path, const LabelMapping& mapping);

/// Replaces raw annotations by intensity labels. Empty strings stay missing.
/// Throws UnmappedAnnotationError naming the first unknown string.
Recording map_annotations(const Recording& recording, const LabelMapping& mapping);

/// Linear interpolation of every axis onto a uniform grid at `target_hz`
/// spanning [t0, last sample]. Annotations, labels and the exclusion mask are
/// carried by nearest neighbour in time.
Recording resample(const Recording& recording, double target_hz);

/// Same as resample() for explicitly timestamped (possibly irregular) input.
/// `times` must be strictly increasing and match samples in length.
Recording resample_timed(const Recording& recording, const std::vector<double>& times,
                         double target_hz);

/// Reads the `pid,age_band,sex` table.
std::vector<SubjectMeta> load_subject_meta(const std::filesystem::path& path);
void write_subject_meta(const std::filesystem::path& path, const std::vector<SubjectMeta>& meta);

}  // namespace wristhar
