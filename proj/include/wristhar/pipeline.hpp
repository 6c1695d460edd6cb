#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wristhar/agreement.hpp"
#include "wristhar/calibration.hpp"
#include "wristhar/cv.hpp"
#include "wristhar/features.hpp"
#include "wristhar/filter.hpp"
#include "wristhar/forest.hpp"
#include "wristhar/hmm.hpp"
#include "wristhar/ingest.hpp"
#include "wristhar/metrics.hpp"
#include "wristhar/nonwear.hpp"
#include "wristhar/postprocess.hpp"
#include "wristhar/windows.hpp"

namespace wristhar {

struct PreprocessOptions {
  double target_rate_hz = 100.0;
  FilterSpec filter;
  NonwearRule nonwear;
  bool calibrate = true;
  CalibrationOptions calibration;
  WindowOptions windows;
};

struct PreprocessResult {
  Recording recording;  // resampled, filtered, non-wear masked, calibrated
  std::vector<TimeInterval> nonwear;
  CalibrationReport calibration;
  std::vector<Window> windows;
};

/// Maps annotations (when a mapping is given), resamples to the target rate,
/// low-pass filters, masks non-wear, auto-calibrates and windows.
PreprocessResult preprocess_recording(const Recording& raw, const LabelMapping* mapping,
                                      const PreprocessOptions& options = {});

/// Feature rows of one participant in time order.
struct ParticipantData {
  std::string participant_id;
  std::vector<FeatureRow> rows;
};

struct PipelineOptions {
  ForestConfig forest;
  HmmTrainingOptions hmm;
  double window_duration_s = 30.0;
  double min_sleep_block_s = kDefaultMinSleepBlockS;
  bool use_hmm = true;
  bool sleep_correction = true;
};

struct TrainedModel {
  ForestModel forest;
  HmmParams hmm;
};

/// Forest on every labelled window; HMM prior and transitions from the true
/// labels; emissions from the forest's out-of-bag probabilities.
TrainedModel train_model(std::span<const ParticipantData> participants,
                         const PipelineOptions& options);

/// Forest probabilities and argmax labels for every window of a participant,
/// with true labels attached. Throws CompatibilityError on a feature layout
/// mismatch.
LabeledSequence predict_raw(const ForestModel& forest, const ParticipantData& participant,
                            int jobs = 1);

/// HMM smoothing then sleep-block correction, each optional per `options`.
LabeledSequence postprocess_sequence(const LabeledSequence& raw, const HmmParams& hmm,
                                     const PipelineOptions& options);

enum class Grouping { AgeBand, Sex };

Grouping parse_grouping(std::string_view text);
std::string_view grouping_name(Grouping grouping);

struct SubgroupReport {
  Grouping grouping = Grouping::Sex;
  std::string group;
  std::vector<std::string> participants;
  MetricsReport metrics;
  std::optional<AgreementReport> agreement;  // needs at least two participants
};

/// Partitions participants by the grouping value and aggregates each part.
/// Throws MetadataError when a participant has no metadata.
std::vector<SubgroupReport> subgroup_report(const MetricsReport& metrics,
                                            std::span<const Composition> truth,
                                            std::span<const Composition> predicted,
                                            std::span<const SubjectMeta> meta, Grouping grouping);

struct CvOptions {
  int k = 5;
  std::uint64_t seed = 0;
};

struct CvReport {
  FoldAssignment folds;
  std::vector<std::vector<std::string>> training_participants;  // as used, per fold
  std::vector<LabeledSequence> predictions;  // post-processed, sorted by participant
  MetricsReport metrics;
  MetricsReport raw_metrics;  // forest argmax before smoothing and correction
  std::vector<Composition> truth_compositions;
  std::vector<Composition> predicted_compositions;
  std::optional<AgreementReport> agreement;
  std::vector<SubgroupReport> subgroups;
  double window_duration_s = 30.0;
};

/// Stratified group k-fold over participants with at least one labelled
/// window. Per fold: train_model on the training participants (forest seed
/// offset by the fold index), predict and post-process each test participant,
/// then evaluate on its labelled windows. Compositions count labelled windows
/// only, so truth and prediction cover identical time.
CvReport run_pipeline_cv(std::span<const ParticipantData> participants,
                         const PipelineOptions& options, const CvOptions& cv);

/// report.json plus CSV summaries and plot-ready tables.
void write_report_bundle(const std::filesystem::path& dir, const CvReport& report);

}  // namespace wristhar
