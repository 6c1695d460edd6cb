#include "wristhar/filter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "wristhar/errors.hpp"

namespace wristhar {

std::vector<Biquad> design_butterworth_lowpass(const FilterSpec& spec, double sample_rate_hz) {
  if (spec.order < 1) throw FilterDesignError("filter order must be at least 1");
  if (!(sample_rate_hz > 0.0)) throw FilterDesignError("sample rate must be positive");
  if (!(spec.cutoff_hz > 0.0) || !(spec.cutoff_hz < sample_rate_hz / 2.0)) {
    throw FilterDesignError("cutoff " + std::to_string(spec.cutoff_hz) +
                            " Hz must lie strictly between 0 and Nyquist (" +
                            std::to_string(sample_rate_hz / 2.0) + " Hz)");
  }
  using cplx = std::complex<double>;
  const double k = 2.0 * sample_rate_hz;
  const double warped = k * std::tan(std::numbers::pi * spec.cutoff_hz / sample_rate_hz);
  const int n = spec.order;

  std::vector<Biquad> sections;
  for (int i = 0; i < n / 2; ++i) {
    const double theta = std::numbers::pi * (2.0 * i + n + 1.0) / (2.0 * n);
    const cplx s = warped * std::polar(1.0, theta);
    const cplx z = (k + s) / (k - s);
    Biquad q;
    q.a1 = -2.0 * z.real();
    q.a2 = std::norm(z);
    const double g = (1.0 + q.a1 + q.a2) / 4.0;
    q.b0 = g;
    q.b1 = 2.0 * g;
    q.b2 = g;
    sections.push_back(q);
  }
  if (n % 2 == 1) {
    const double z = (k - warped) / (k + warped);
    Biquad q;
    q.a1 = -z;
    const double g = (1.0 + q.a1) / 2.0;
    q.b0 = g;
    q.b1 = g;
    sections.push_back(q);
  }
  return sections;
}

double magnitude_response(std::span<const Biquad> sections, double freq_hz,
                          double sample_rate_hz) {
  using cplx = std::complex<double>;
  const cplx zinv = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate_hz);
  cplx h = 1.0;
  for (const Biquad& q : sections) {
    h *= (q.b0 + zinv * (q.b1 + zinv * q.b2)) / (1.0 + zinv * (q.a1 + zinv * q.a2));
  }
  return std::abs(h);
}

namespace {

struct SectionState {
  double z1 = 0.0;
  double z2 = 0.0;
};

// Steady-state delay-line contents for a unit step, per section.
std::vector<SectionState> unit_step_state(std::span<const Biquad> sections) {
  std::vector<SectionState> out;
  double input = 1.0;
  for (const Biquad& q : sections) {
    const double y = input * (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    SectionState s;
    s.z2 = q.b2 * input - q.a2 * y;
    s.z1 = q.b1 * input - q.a1 * y + s.z2;
    out.push_back(s);
    input = y;
  }
  return out;
}

void run_cascade(std::span<const Biquad> sections, const std::vector<SectionState>& step,
                 std::vector<double>& data) {
  if (data.empty()) return;
  const double x0 = data.front();
  for (std::size_t s = 0; s < sections.size(); ++s) {
    const Biquad& q = sections[s];
    double z1 = step[s].z1 * x0;
    double z2 = step[s].z2 * x0;
    for (double& v : data) {
      const double x = v;
      const double y = q.b0 * x + z1;
      z1 = q.b1 * x - q.a1 * y + z2;
      z2 = q.b2 * x - q.a2 * y;
      v = y;
    }
  }
}

}  // namespace

std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> signal,
                             std::size_t pad) {
  const std::size_t n = signal.size();
  if (n < 2) return {signal.begin(), signal.end()};
  pad = std::min(pad, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * signal[0] - signal[i]);
  ext.insert(ext.end(), signal.begin(), signal.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * signal[n - 1] - signal[n - 1 - i]);

  const auto step = unit_step_state(sections);
  run_cascade(sections, step, ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade(sections, step, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

Recording lowpass(const Recording& recording, const FilterSpec& spec) {
  validate(recording);
  const auto sections = design_butterworth_lowpass(spec, recording.sample_rate_hz);
  const std::size_t pad = 3 * static_cast<std::size_t>(spec.order);
  const std::size_t n = recording.size();
  std::vector<double> axis(n);
  Recording out = recording;
  for (int a = 0; a < 3; ++a) {
    const auto member = a == 0 ? &Accel::x : a == 1 ? &Accel::y : &Accel::z;
    for (std::size_t i = 0; i < n; ++i) axis[i] = recording.samples[i].*member;
    const auto filtered = filtfilt(sections, axis, pad);
    for (std::size_t i = 0; i < n; ++i) out.samples[i].*member = filtered[i];
  }
  return out;
}

}  // namespace wristhar
