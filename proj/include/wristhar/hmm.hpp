#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wristhar/labels.hpp"

namespace wristhar {

using Matrix4 = std::array<std::array<double, kNumLabels>, kNumLabels>;

inline constexpr double kDefaultSmoothingFloor = 1e-6;
inline constexpr double kDefaultExpectedGapS = 30.0;
inline constexpr double kDefaultGapToleranceS = 0.5;

/// prior[i] = P(s0 = i); transition[i][j] = P(s_{t+1} = j | s_t = i);
/// emission[i][j] = P(observed j | true state i).
struct HmmParams {
  ClassProbs prior{};
  Matrix4 transition{};
  Matrix4 emission{};
};

/// Throws InputError unless every distribution is non-negative and sums to
/// 1 within `tolerance`.
void validate(const HmmParams& params, double tolerance = 1e-9);

struct LabeledSequence {
  std::string participant_id;
  std::vector<double> times;  // window start times, strictly increasing
  std::optional<std::vector<MaybeLabel>> true_labels;
  std::vector<IntensityLabel> pred_labels;
  std::optional<std::vector<ClassProbs>> pred_probs;
};

/// Throws InputError when lengths differ or times are not increasing.
void validate(const LabeledSequence& sequence);

struct HmmTrainingOptions {
  double smoothing_floor = kDefaultSmoothingFloor;
  double expected_gap_s = kDefaultExpectedGapS;
  double gap_tolerance_s = kDefaultGapToleranceS;
};

/// Maps a probability vector p to eps + (1 - n*eps) * p so every entry is at
/// least eps and the sum stays 1.
ClassProbs apply_floor(const ClassProbs& p, double eps);

/// Empirical class frequencies, floored.
ClassProbs train_prior(std::span<const IntensityLabel> labels,
                       double eps = kDefaultSmoothingFloor);

/// Raw transition counts before pseudo-counts and normalization. Only pairs
/// of consecutive labelled windows spaced expected_gap_s apart (within the
/// tolerance) are counted.
Matrix4 count_transitions(std::span<const LabeledSequence> sequences,
                          const HmmTrainingOptions& options = {});

/// count_transitions plus one sleep→sedentary and one sedentary→sleep
/// pseudo-count per participant, then row-normalized and floored. Rows with
/// no counts fall back to self-transition. Throws DegenerateTrainingError if
/// no observed transition is valid.
Matrix4 train_transition(std::span<const LabeledSequence> sequences,
                         const HmmTrainingOptions& options = {});

/// E[i][j] = mean of probs[.][j] over rows whose true label is i. Classes
/// without rows get the identity row. Throws DegenerateTrainingError if no
/// class has rows.
Matrix4 train_emission(std::span<const IntensityLabel> true_labels,
                       std::span<const ClassProbs> pred_probs,
                       double eps = kDefaultSmoothingFloor);

/// Most likely hidden-state path, computed in log space; ties resolve toward
/// the lower state index (scores within a relative 1e-12 count as tied).
std::vector<IntensityLabel> viterbi(std::span<const IntensityLabel> observations,
                                    const HmmParams& params);

/// Log-probability of a (state path, observation) pair under the model.
double path_log_probability(std::span<const IntensityLabel> states,
                            std::span<const IntensityLabel> observations,
                            const HmmParams& params);

/// Start indices of contiguous segments: a new segment begins wherever the
/// gap to the previous time differs from expected_gap_s by more than the
/// tolerance.
std::vector<std::size_t> segment_starts(std::span<const double> times, double expected_gap_s,
                                        double tolerance_s = kDefaultGapToleranceS);

/// Runs viterbi independently per contiguous segment of pred_labels and
/// returns a copy whose pred_labels hold the smoothed path.
LabeledSequence smooth_sequence(const LabeledSequence& sequence, const HmmParams& params,
                                double expected_gap_s = kDefaultExpectedGapS,
                                double tolerance_s = kDefaultGapToleranceS);

/// Plain-text persistence: versioned header, prior, transition and emission
/// in row-major order with 17 significant digits.
void save_hmm(const std::filesystem::path& path, const HmmParams& params);
HmmParams load_hmm(const std::filesystem::path& path);

}  // namespace wristhar
