#include "wristhar/recording.hpp"

#include <cmath>

#include "wristhar/errors.hpp"

namespace wristhar {

void validate(const Recording& recording) {
  if (recording.samples.empty()) throw InputError("recording has no samples");
  if (!(recording.sample_rate_hz > 0.0) || !std::isfinite(recording.sample_rate_hz)) {
    throw InputError("recording sample rate must be positive");
  }
  const auto n = recording.samples.size();
  if (recording.has_annotations() && recording.annotations.size() != n) {
    throw InputError("annotation count does not match sample count");
  }
  if (recording.has_labels() && recording.labels.size() != n) {
    throw InputError("label count does not match sample count");
  }
  if (!recording.excluded.empty() && recording.excluded.size() != n) {
    throw InputError("exclusion mask length does not match sample count");
  }
}

std::string_view age_band_name(AgeBand band) {
  switch (band) {
    case AgeBand::Age18To29:
      return "18-29";
    case AgeBand::Age30To37:
      return "30-37";
    case AgeBand::Age37To52:
      return "37-52";
    case AgeBand::Age53Plus:
      return "53+";
  }
  return "unknown";
}

std::string_view sex_name(Sex sex) { return sex == Sex::Female ? "female" : "male"; }

AgeBand parse_age_band(std::string_view text) {
  const std::string name = normalize_annotation(text);
  for (AgeBand band : {AgeBand::Age18To29, AgeBand::Age30To37, AgeBand::Age37To52,
                       AgeBand::Age53Plus}) {
    if (name == age_band_name(band)) return band;
  }
  throw ParseError("unknown age band '" + std::string(text) + "'");
}

Sex parse_sex(std::string_view text) {
  const std::string name = normalize_annotation(text);
  if (name == "female" || name == "f") return Sex::Female;
  if (name == "male" || name == "m") return Sex::Male;
  throw ParseError("unknown sex '" + std::string(text) + "'");
}

}  // namespace wristhar
