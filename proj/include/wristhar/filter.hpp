#pragma once

#include <span>
#include <vector>

#include "wristhar/recording.hpp"

namespace wristhar {

struct FilterSpec {
  double cutoff_hz = 20.0;
  int order = 4;
};

/// Direct-form II transposed second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Digital Butterworth low-pass as cascaded sections (bilinear transform with
/// frequency pre-warping). Odd orders carry one first-order section (b2 = a2 = 0).
/// Throws FilterDesignError unless 0 < cutoff < fs/2 and order >= 1.
std::vector<Biquad> design_butterworth_lowpass(const FilterSpec& spec, double sample_rate_hz);

/// |H(e^{jw})| of the cascade at `freq_hz`.
double magnitude_response(std::span<const Biquad> sections, double freq_hz,
                          double sample_rate_hz);

/// Zero-phase forward-backward filtering with odd-reflection padding of
/// `pad` samples at each end and steady-state initial conditions.
std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> signal,
                             std::size_t pad);

/// Filters each axis independently; padding is 3 x order samples.
Recording lowpass(const Recording& recording, const FilterSpec& spec = {});

}  // namespace wristhar
