#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wristhar/hmm.hpp"
#include "wristhar/ingest.hpp"
#include "wristhar/labels.hpp"

namespace wristhar {

/// Per-window class probabilities produced by any upstream classifier.
struct ExternalPredictions {
  std::string participant_id;
  std::vector<double> times;  // window start times, epoch seconds
  std::vector<ClassProbs> probs;
  std::string source_tag;
};

inline constexpr double kExternalRowSumTolerance = 1e-2;
inline constexpr double kAlignToleranceS = 0.5;

/// Parses `pid,time,p_sleep,p_sedentary,p_light,p_mvpa`, grouping rows by
/// participant in order of first appearance. Rows summing to within 1e-2 of
/// 1 are renormalized; anything else, or a negative entry, raises
/// ValidationError naming the line.
std::vector<ExternalPredictions> parse_external_predictions(std::string_view content,
                                                            std::string_view source_tag,
                                                            TimeFormat format = TimeFormat::Auto);

std::vector<ExternalPredictions> load_external_predictions(const std::filesystem::path& path,
                                                           TimeFormat format = TimeFormat::Auto);

/// Writes rows in the same format with epoch-millisecond times and
/// probabilities in round-trip precision.
void write_external_predictions(const std::filesystem::path& path,
                                std::span<const ExternalPredictions> predictions);

/// Timestamp plus optional truth for one window, as consumed by alignment.
struct WindowRef {
  std::string participant_id;
  double start_time = 0.0;
  MaybeLabel label;
};

/// Joins predictions to windows of the same participant by start time within
/// ±tolerance. Windows without a match are dropped; the result carries true
/// labels, probabilities, and argmax predicted labels. Throws AlignmentError
/// when nothing matches.
LabeledSequence align_predictions(const ExternalPredictions& predictions,
                                  std::span<const WindowRef> windows,
                                  double tolerance_s = kAlignToleranceS);

}  // namespace wristhar
