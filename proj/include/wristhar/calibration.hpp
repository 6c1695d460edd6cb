#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include "wristhar/recording.hpp"

namespace wristhar {

using Vec3 = std::array<double, 3>;

/// Calibrated value per axis is offset + gain * raw.
struct CalibrationReport {
  Vec3 gain{1.0, 1.0, 1.0};
  Vec3 offset{0.0, 0.0, 0.0};
  int iterations = 0;
  double initial_residual = 0.0;  // RMS of |point| - 1 before calibration (g)
  double final_residual = 0.0;
  bool applied = false;
  std::size_t n_stationary = 0;
  std::string reason;  // why calibration was not applied, empty otherwise
};

struct CalibrationOptions {
  double sd_threshold_g = 0.015;
  double chunk_s = 10.0;
  std::size_t min_stationary = 10;
  double axis_diversity_g = 0.3;
  int max_iterations = 1000;
  double tolerance = 1e-9;
  double min_gain = 0.5;
  double max_gain = 1.5;
  double max_abs_offset_g = 0.5;
};

struct SphereFit {
  Vec3 gain{1.0, 1.0, 1.0};
  Vec3 offset{0.0, 0.0, 0.0};
  int iterations = 0;
  double initial_residual = 0.0;
  double final_residual = 0.0;
};

/// RMS distance of offset + gain * p from the unit sphere.
double unit_sphere_residual(std::span<const Accel> points, const Vec3& gain, const Vec3& offset);

/// Alternating fit: project calibrated points onto the unit sphere, then
/// regress the projections on the raw points per axis. Stops when the
/// residual improves by less than `tolerance` or after `max_iterations`.
SphereFit fit_unit_sphere(std::span<const Accel> points, int max_iterations = 1000,
                          double tolerance = 1e-9);

/// Fits on the means of stationary chunks and applies the correction only
/// when enough diverse stationary chunks exist and the fit is within bounds.
std::pair<Recording, CalibrationReport> autocalibrate(const Recording& recording,
                                                      const CalibrationOptions& options = {});

}  // namespace wristhar
