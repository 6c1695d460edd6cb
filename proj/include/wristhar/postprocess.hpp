#pragma once

#include <span>
#include <vector>

#include "wristhar/hmm.hpp"
#include "wristhar/labels.hpp"

namespace wristhar {

inline constexpr double kDefaultMinSleepBlockS = 3600.0;

/// Rewrites every maximal run of consecutive sleep labels shorter than
/// `min_block_s` (run length x window duration) to sedentary. The whole input
/// is treated as one contiguous segment.
std::vector<IntensityLabel> sleep_block_correction(std::span<const IntensityLabel> labels,
                                                   double window_duration_s = 30.0,
                                                   double min_block_s = kDefaultMinSleepBlockS);

/// Segment-aware variant over a sequence's pred_labels: runs never extend
/// across a time gap (see segment_starts).
LabeledSequence sleep_block_correction(const LabeledSequence& sequence,
                                       double window_duration_s = 30.0,
                                       double min_block_s = kDefaultMinSleepBlockS,
                                       double gap_tolerance_s = kDefaultGapToleranceS);

}  // namespace wristhar
