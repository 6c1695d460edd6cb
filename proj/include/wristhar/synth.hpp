#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "wristhar/ingest.hpp"
#include "wristhar/recording.hpp"

namespace wristhar {

/// Shape of each synthetic participant's recording: an awake block, one
/// night-like sleep block, then a second awake block.
struct SyntheticProfile {
  double sample_rate_hz = 100.0;
  double start_epoch_s = 1.7e9;
  double awake_before_minutes = 25.0;
  double awake_after_minutes = 35.0;
  double sleep_min_minutes = 65.0;
  double sleep_max_minutes = 85.0;
  double segment_min_minutes = 2.0;
  double segment_max_minutes = 8.0;
  int max_posture_changes = 2;        // during sleep
  double unannotated_minutes = 2.0;   // one gap in the second awake block; 0 disables
  std::size_t participants_without_mvpa = 0;  // the first N participants
  /// Per-class oscillation/noise settings.
  double sleep_noise_g = 0.003;
  double sedentary_noise_g = 0.008;
  double sedentary_drift_rad = 0.15;
  double sedentary_drift_period_s = 20.0;
  double light_amplitude_g = 0.1;
  double light_min_hz = 1.0;
  double light_max_hz = 2.0;
  double mvpa_amplitude_g = 0.6;
  double mvpa_min_hz = 2.0;
  double mvpa_max_hz = 4.0;
};

struct SyntheticCohort {
  std::vector<Recording> recordings;  // raw annotations, no labels
  std::vector<SubjectMeta> meta;
  LabelMapping mapping;
};

/// Participants are named P001, P002, ... and each draws from its own
/// stream seeded by (seed, index), so a participant's data does not depend
/// on n. Throws InputError when n is zero.
SyntheticCohort generate_synthetic_cohort(std::size_t n_participants, std::uint64_t seed,
                                          const SyntheticProfile& profile = {});

}  // namespace wristhar
