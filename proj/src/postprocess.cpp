#include "wristhar/postprocess.hpp"

#include <algorithm>

#include "wristhar/errors.hpp"

namespace wristhar {

std::vector<IntensityLabel> sleep_block_correction(std::span<const IntensityLabel> labels,
                                                   double window_duration_s, double min_block_s) {
  if (!(window_duration_s > 0.0)) throw ConfigurationError("window duration must be positive");
  std::vector<IntensityLabel> out(labels.begin(), labels.end());
  std::size_t i = 0;
  while (i < out.size()) {
    if (out[i] != IntensityLabel::Sleep) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < out.size() && out[j] == IntensityLabel::Sleep) ++j;
    // Tolerance absorbs rounding in run_length * duration for exact boundaries.
    if (static_cast<double>(j - i) * window_duration_s < min_block_s - 1e-9) {
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(i),
                out.begin() + static_cast<std::ptrdiff_t>(j), IntensityLabel::Sedentary);
    }
    i = j;
  }
  return out;
}

LabeledSequence sleep_block_correction(const LabeledSequence& sequence, double window_duration_s,
                                       double min_block_s, double gap_tolerance_s) {
  validate(sequence);
  LabeledSequence out = sequence;
  auto starts = segment_starts(sequence.times, window_duration_s, gap_tolerance_s);
  starts.push_back(sequence.times.size());
  for (std::size_t s = 0; s + 1 < starts.size(); ++s) {
    const std::span<const IntensityLabel> segment(sequence.pred_labels.data() + starts[s],
                                                  starts[s + 1] - starts[s]);
    const auto corrected = sleep_block_correction(segment, window_duration_s, min_block_s);
    std::copy(corrected.begin(), corrected.end(),
              out.pred_labels.begin() + static_cast<std::ptrdiff_t>(starts[s]));
  }
  return out;
}

}  // namespace wristhar
