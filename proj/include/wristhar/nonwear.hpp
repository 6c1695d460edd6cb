#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wristhar/recording.hpp"

namespace wristhar {

struct NonwearRule {
  double sd_threshold_g = 0.015;  // 15 mg
  double min_duration_s = 5400.0;  // 90 min
  double window_s = 10.0;
};

/// Half-open time interval [start, end) in recording time (epoch seconds).
struct TimeInterval {
  double start = 0.0;
  double end = 0.0;

  double duration() const { return end - start; }
  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

/// Per-axis statistics over one chunk of consecutive samples [begin, end).
struct ChunkStats {
  std::size_t begin = 0;
  std::size_t end = 0;
  Accel mean;
  Accel sd;  // population standard deviation
  bool touches_excluded = false;
};

/// Non-overlapping chunks of round(chunk_s * fs) samples aligned to the first
/// sample; a trailing partial chunk is included.
std::vector<ChunkStats> chunk_statistics(const Recording& recording, double chunk_s);

/// All three axis standard deviations strictly below the threshold.
bool is_stationary(const ChunkStats& chunk, double sd_threshold_g);

/// Maximal runs of stationary chunks lasting at least rule.min_duration_s.
std::vector<TimeInterval> detect_nonwear(const Recording& recording, const NonwearRule& rule = {});

/// Marks samples whose timestamp falls inside any interval as excluded.
/// Throws InputError if intervals overlap.
Recording remove_nonwear(const Recording& recording, std::span<const TimeInterval> intervals);

}  // namespace wristhar
