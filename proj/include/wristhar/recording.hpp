#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "wristhar/labels.hpp"

namespace wristhar {

/// One tri-axial acceleration sample in units of g.
struct Accel {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Accel&, const Accel&) = default;
};

/// Uniformly sampled tri-axial recording for one participant.
///
/// Annotations are optional and exist in two stages: raw free-text strings as
/// read from disk (an empty string marks a missing annotation), and intensity
/// labels produced by map_annotations(). Either vector is empty when absent,
/// otherwise it has exactly one entry per sample. The excluded mask is empty
/// until remove_nonwear() marks samples.
struct Recording {
  std::string participant_id;
  double sample_rate_hz = 0.0;
  double t0 = 0.0;  // seconds since the Unix epoch
  std::vector<Accel> samples;
  std::vector<std::string> annotations;
  std::vector<MaybeLabel> labels;
  std::vector<std::uint8_t> excluded;

  std::size_t size() const { return samples.size(); }
  double sample_period() const { return 1.0 / sample_rate_hz; }
  double time_at(std::size_t i) const { return t0 + static_cast<double>(i) / sample_rate_hz; }
  /// End of the covered span, i.e. one sample period past the last sample.
  double end_time() const { return time_at(samples.size()); }
  bool has_annotations() const { return !annotations.empty(); }
  bool has_labels() const { return !labels.empty(); }
  bool is_excluded(std::size_t i) const { return !excluded.empty() && excluded[i] != 0; }
};

/// Throws InputError when the recording violates its structural invariants.
void validate(const Recording& recording);

enum class AgeBand { Age18To29, Age30To37, Age37To52, Age53Plus };
enum class Sex { Female, Male };

std::string_view age_band_name(AgeBand band);
std::string_view sex_name(Sex sex);
AgeBand parse_age_band(std::string_view text);
Sex parse_sex(std::string_view text);

struct SubjectMeta {
  std::string participant_id;
  AgeBand age_band = AgeBand::Age18To29;
  Sex sex = Sex::Female;
};

}  // namespace wristhar
