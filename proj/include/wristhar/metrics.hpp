#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wristhar/labels.hpp"

namespace wristhar {

/// Rows are true labels, columns predicted labels.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumLabels>, kNumLabels> counts{};

  void add(IntensityLabel truth, IntensityLabel predicted) {
    ++counts[index_of(truth)][index_of(predicted)];
  }
  std::uint64_t total() const;
  std::uint64_t row_total(std::size_t i) const;
  std::uint64_t column_total(std::size_t j) const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion_matrix(std::span<const IntensityLabel> truth,
                                 std::span<const IntensityLabel> predicted);

// All four throw InputError on an empty matrix.
double accuracy(const ConfusionMatrix& cm);
/// Mean recall over classes with at least one true instance.
double balanced_accuracy(const ConfusionMatrix& cm);
/// Mean F1 over classes present in truth or prediction; a class's F1 is 0
/// when precision + recall is 0.
double macro_f1(const ConfusionMatrix& cm);
/// (p_o - p_e) / (1 - p_e); 1 when p_e = 1 and agreement is perfect.
double cohen_kappa(const ConfusionMatrix& cm);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample SD; 0 for a single participant
  std::vector<double> values;
};

MetricSummary summarize(std::vector<double> values);

struct ParticipantMetrics {
  std::string participant_id;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double cohen_kappa = 0.0;
  double macro_f1 = 0.0;
};

ParticipantMetrics participant_metrics(std::string participant_id, const ConfusionMatrix& cm);

struct MetricsReport {
  std::vector<ParticipantMetrics> participants;
  MetricSummary accuracy;
  MetricSummary balanced_accuracy;
  MetricSummary cohen_kappa;
  MetricSummary macro_f1;
  ConfusionMatrix pooled;
  double pooled_accuracy = 0.0;
  double pooled_balanced_accuracy = 0.0;
  double pooled_cohen_kappa = 0.0;
  double pooled_macro_f1 = 0.0;
};

struct ParticipantLabels {
  std::string participant_id;
  std::vector<IntensityLabel> truth;
  std::vector<IntensityLabel> predicted;
};

/// Metrics per participant, then mean and sample SD across participants,
/// plus metrics of the pooled confusion matrix. Throws InputError if a
/// participant has no windows.
MetricsReport per_participant_metrics(std::span<const ParticipantLabels> participants);

/// Same aggregation from precomputed per-participant confusion matrices.
MetricsReport aggregate_metrics(std::vector<ParticipantMetrics> participants);

}  // namespace wristhar
