#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wristhar/labels.hpp"

namespace wristhar {

/// Hours per intensity class for one participant.
struct Composition {
  std::string participant_id;
  ClassProbs hours{};
  std::size_t windows = 0;
};

/// hours[c] = count(c) * window_duration_s / 3600.
Composition composition(std::string participant_id, std::span<const IntensityLabel> labels,
                        double window_duration_s = 30.0);

struct LabelAgreement {
  std::size_t n = 0;
  double mean_difference = 0.0;  // mean of b - a, hours
  double sd_difference = 0.0;
  double loa_lower = 0.0;
  double loa_upper = 0.0;
  double pearson_r = 0.0;
  double mae = 0.0;  // mean |b - a|
  double mae_sd = 0.0;
  std::optional<double> mape;  // percent; empty when every a_i is zero
  std::size_t mape_excluded = 0;
  double t_statistic = 0.0;
  double p_value = 1.0;
};

struct AgreementReport {
  std::vector<std::string> participants;
  std::array<LabelAgreement, kNumLabels> per_label;
};

/// Compares reference compositions `a` with `b` paired by participant id.
/// Throws PairingError if the participant sets differ and
/// InsufficientDataError for fewer than two participants.
///
/// Pearson r is 1 when both series are constant and equal up to a shift, 0
/// when exactly one of them is constant.
AgreementReport composition_agreement(std::span<const Composition> a,
                                      std::span<const Composition> b);

/// Regularized incomplete beta I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Student's t distribution with `dof` degrees of freedom.
double students_t_cdf(double t, double dof);

struct TTestResult {
  double t_statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;  // two-sided
};

/// Paired two-sided t-test on differences b - a. A zero-variance set of
/// differences gives p = 1 when the mean is zero and p = 0 otherwise.
/// Throws InsufficientDataError for fewer than two pairs.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace wristhar
