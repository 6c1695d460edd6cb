#include "wristhar/calibration.hpp"

#include <cmath>
#include <vector>

#include "wristhar/nonwear.hpp"

namespace wristhar {

namespace {

double component(const Accel& a, int axis) { return axis == 0 ? a.x : axis == 1 ? a.y : a.z; }

Accel calibrate(const Accel& a, const Vec3& gain, const Vec3& offset) {
  return {offset[0] + gain[0] * a.x, offset[1] + gain[1] * a.y, offset[2] + gain[2] * a.z};
}

}  // namespace

double unit_sphere_residual(std::span<const Accel> points, const Vec3& gain, const Vec3& offset) {
  if (points.empty()) return 0.0;
  double sum = 0.0;
  for (const Accel& p : points) {
    const Accel c = calibrate(p, gain, offset);
    const double err = std::sqrt(c.x * c.x + c.y * c.y + c.z * c.z) - 1.0;
    sum += err * err;
  }
  return std::sqrt(sum / static_cast<double>(points.size()));
}

SphereFit fit_unit_sphere(std::span<const Accel> points, int max_iterations, double tolerance) {
  SphereFit fit;
  fit.initial_residual = unit_sphere_residual(points, fit.gain, fit.offset);
  fit.final_residual = fit.initial_residual;
  if (points.size() < 2) return fit;

  const auto n = static_cast<double>(points.size());
  Vec3 mean_raw{};
  Vec3 var_raw{};
  for (int k = 0; k < 3; ++k) {
    for (const Accel& p : points) mean_raw[k] += component(p, k);
    mean_raw[k] /= n;
    for (const Accel& p : points) {
      const double d = component(p, k) - mean_raw[k];
      var_raw[k] += d * d;
    }
  }

  std::vector<Accel> targets(points.size());
  double residual = fit.initial_residual;
  for (int it = 1; it <= max_iterations; ++it) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Accel c = calibrate(points[i], fit.gain, fit.offset);
      const double norm = std::sqrt(c.x * c.x + c.y * c.y + c.z * c.z);
      targets[i] = norm > 0.0 ? Accel{c.x / norm, c.y / norm, c.z / norm} : c;
    }
    Vec3 gain = fit.gain;
    Vec3 offset = fit.offset;
    for (int k = 0; k < 3; ++k) {
      double mean_t = 0.0;
      for (const Accel& t : targets) mean_t += component(t, k);
      mean_t /= n;
      if (var_raw[k] > 1e-12) {
        double cov = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
          cov += (component(points[i], k) - mean_raw[k]) * (component(targets[i], k) - mean_t);
        }
        gain[k] = cov / var_raw[k];
      }
      offset[k] = mean_t - gain[k] * mean_raw[k];
    }
    const double next = unit_sphere_residual(points, gain, offset);
    fit.iterations = it;
    if (next <= residual) {
      fit.gain = gain;
      fit.offset = offset;
    }
    const double improvement = residual - next;
    residual = std::min(residual, next);
    if (improvement < tolerance) break;
  }
  fit.final_residual = residual;
  return fit;
}

std::pair<Recording, CalibrationReport> autocalibrate(const Recording& recording,
                                                      const CalibrationOptions& options) {
  CalibrationReport report;
  std::vector<Accel> means;
  for (const ChunkStats& c : chunk_statistics(recording, options.chunk_s)) {
    if (!c.touches_excluded && is_stationary(c, options.sd_threshold_g)) means.push_back(c.mean);
  }
  report.n_stationary = means.size();
  report.initial_residual = unit_sphere_residual(means, report.gain, report.offset);
  report.final_residual = report.initial_residual;

  if (means.size() < options.min_stationary) {
    report.reason = "too few stationary chunks";
    return {recording, report};
  }
  for (int k = 0; k < 3; ++k) {
    bool above = false;
    bool below = false;
    for (const Accel& m : means) {
      above = above || component(m, k) > options.axis_diversity_g;
      below = below || component(m, k) < -options.axis_diversity_g;
    }
    if (!above || !below) {
      report.reason = "insufficient orientation diversity on axis " + std::string(1, "xyz"[k]);
      return {recording, report};
    }
  }

  const SphereFit fit = fit_unit_sphere(means, options.max_iterations, options.tolerance);
  report.iterations = fit.iterations;
  for (int k = 0; k < 3; ++k) {
    if (fit.gain[k] < options.min_gain || fit.gain[k] > options.max_gain ||
        std::abs(fit.offset[k]) > options.max_abs_offset_g) {
      report.reason = "fitted parameters out of bounds";
      return {recording, report};
    }
  }
  if (!(fit.final_residual <= fit.initial_residual)) {
    report.reason = "fit did not reduce the residual";
    return {recording, report};
  }
  report.gain = fit.gain;
  report.offset = fit.offset;
  report.final_residual = fit.final_residual;
  report.applied = true;

  Recording out = recording;
  for (Accel& a : out.samples) a = calibrate(a, fit.gain, fit.offset);
  return {std::move(out), report};
}

}  // namespace wristhar
