#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wristhar/labels.hpp"
#include "wristhar/recording.hpp"

namespace wristhar {

struct Window {
  std::string participant_id;
  double start_time = 0.0;  // epoch seconds
  double duration_s = 30.0;
  double sample_rate_hz = 0.0;
  std::vector<Accel> samples;
  MaybeLabel label;
  double label_coverage = 0.0;  // fraction of samples carrying the majority label
};

struct WindowOptions {
  double duration_s = 30.0;
  double min_annotated_fraction = 0.5;
};

/// Consecutive, non-overlapping windows aligned to the recording start.
/// Windows touching excluded samples and the trailing partial window are
/// dropped. The label is the most frequent per-sample label (ties toward the
/// lower canonical index), or missing when fewer than
/// `min_annotated_fraction` of the samples carry a label.
/// Throws ConfigurationError if the duration is not a positive multiple of
/// the sample period.
std::vector<Window> make_windows(const Recording& recording, const WindowOptions& options = {});

/// Window index table (`pid,start_time,duration_s,sample_rate_hz,label,coverage`)
/// plus a sidecar sample table (`window,x,y,z`) in shortest round-trip form.
/// An empty `samples_path` writes the index only.
void write_windows(const std::filesystem::path& index_path,
                   const std::filesystem::path& samples_path, const std::vector<Window>& windows);

std::vector<Window> read_windows(const std::filesystem::path& index_path,
                                 const std::filesystem::path& samples_path);

}  // namespace wristhar
