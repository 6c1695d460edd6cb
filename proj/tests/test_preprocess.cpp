#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"
#include "wristhar/calibration.hpp"
#include "wristhar/errors.hpp"
#include "wristhar/filter.hpp"
#include "wristhar/nonwear.hpp"
#include "wristhar/windows.hpp"

using namespace wristhar;

namespace {

constexpr double kPi = std::numbers::pi;

// Digital Butterworth magnitude under the bilinear transform with prewarping.
double bilinear_butterworth_gain(double f, double fc, double fs, int order) {
  const double ratio = std::tan(kPi * f / fs) / std::tan(kPi * fc / fs);
  return 1.0 / std::sqrt(1.0 + std::pow(ratio, 2 * order));
}

// Amplitude of the f-Hz component over samples [begin, end), which should
// span whole periods.
double sine_amplitude(const std::vector<double>& x, double f, double fs, std::size_t begin,
                      std::size_t end) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double w = 2.0 * kPi * f * static_cast<double>(i) / fs;
    s += x[i] * std::sin(w);
    c += x[i] * std::cos(w);
  }
  const double n = static_cast<double>(end - begin);
  return 2.0 * std::sqrt(s * s + c * c) / n;
}

std::vector<double> sine(double f, double fs, double seconds) {
  std::vector<double> x(static_cast<std::size_t>(seconds * fs));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * kPi * f * static_cast<double>(i) / fs);
  return x;
}

Recording labelled(double seconds, double fs, std::vector<std::pair<double, MaybeLabel>> spans) {
  Recording r = testing::constant_recording(seconds, fs, {0, 0, 1});
  r.labels.assign(r.size(), std::nullopt);
  std::size_t at = 0;
  for (const auto& [dur, label] : spans) {
    const auto n = static_cast<std::size_t>(std::llround(dur * fs));
    for (std::size_t i = 0; i < n && at < r.size(); ++i) r.labels[at++] = label;
  }
  return r;
}

// Points on the unit sphere spread over all orientations.
std::vector<Accel> sphere_points(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Accel> pts;
  while (pts.size() < n) {
    const double x = g(rng), y = g(rng), z = g(rng);
    const double norm = std::sqrt(x * x + y * y + z * z);
    if (norm < 1e-6) continue;
    pts.push_back({x / norm, y / norm, z / norm});
  }
  return pts;
}

}  // namespace

TEST_CASE("Butterworth design matches the bilinear magnitude oracle") {
  const auto sections = design_butterworth_lowpass({20.0, 4}, 100.0);
  CHECK(sections.size() == 2);
  for (double f : {0.0, 0.5, 1.0, 5.0, 10.0, 19.0, 20.0, 25.0, 40.0, 49.0}) {
    CHECK(magnitude_response(sections, f, 100.0) ==
          doctest::Approx(bilinear_butterworth_gain(f, 20.0, 100.0, 4)).epsilon(1e-9));
  }
  // -3 dB at the cutoff.
  CHECK(magnitude_response(sections, 20.0, 100.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  const auto odd = design_butterworth_lowpass({5.0, 3}, 50.0);
  for (double f : {0.0, 2.0, 5.0, 12.0, 24.0}) {
    CHECK(magnitude_response(odd, f, 50.0) ==
          doctest::Approx(bilinear_butterworth_gain(f, 5.0, 50.0, 3)).epsilon(1e-9));
  }
}

TEST_CASE("filter design errors") {
  CHECK_THROWS_AS(design_butterworth_lowpass({50.0, 4}, 100.0), FilterDesignError);
  CHECK_THROWS_AS(design_butterworth_lowpass({60.0, 4}, 100.0), FilterDesignError);
  CHECK_THROWS_AS(design_butterworth_lowpass({0.0, 4}, 100.0), FilterDesignError);
  CHECK_THROWS_AS(design_butterworth_lowpass({10.0, 0}, 100.0), FilterDesignError);
  CHECK_THROWS_AS(lowpass(testing::constant_recording(1, 30.0, {0, 0, 1}), {20.0, 4}),
                  FilterDesignError);
}

TEST_CASE("lowpass keeps a constant signal") {
  const Recording r = testing::constant_recording(10.0, 100.0, {0.2, -0.3, 0.95});
  const Recording out = lowpass(r);
  REQUIRE(out.size() == r.size());
  CHECK(out.t0 == r.t0);
  for (const Accel& a : out.samples) {
    CHECK(std::abs(a.x - 0.2) < 1e-9);
    CHECK(std::abs(a.y + 0.3) < 1e-9);
    CHECK(std::abs(a.z - 0.95) < 1e-9);
  }
}

TEST_CASE("two-pass gain on 30 s sines matches the squared magnitude") {
  const auto sections = design_butterworth_lowpass({20.0, 4}, 100.0);
  for (double f : {1.0, 5.0, 10.0, 15.0, 40.0}) {
    const auto x = sine(f, 100.0, 30.0);
    const auto y = filtfilt(sections, x, 12);
    REQUIRE(y.size() == x.size());
    // Middle 20 s: whole periods for every test frequency.
    const double amp = sine_amplitude(y, f, 100.0, 500, 2500);
    const double expected = std::pow(bilinear_butterworth_gain(f, 20.0, 100.0, 4), 2);
    CHECK(amp == doctest::Approx(expected).epsilon(1e-3).scale(1e-3));
    if (f == 1.0) CHECK(std::abs(amp - 1.0) < 0.01);
    if (f == 40.0) CHECK(amp < 0.01);
  }
}

TEST_CASE("filtering twice barely changes in-band amplitude") {
  Recording r = testing::constant_recording(30.0, 100.0, {0, 0, 1});
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.samples[i].x = std::sin(2.0 * kPi * 10.0 * static_cast<double>(i) / 100.0);
  }
  const Recording once = lowpass(r);
  const Recording twice = lowpass(once);
  std::vector<double> a, b;
  for (std::size_t i = 0; i < r.size(); ++i) {
    a.push_back(once.samples[i].x);
    b.push_back(twice.samples[i].x);
  }
  const double amp1 = sine_amplitude(a, 10.0, 100.0, 500, 2500);
  const double amp2 = sine_amplitude(b, 10.0, 100.0, 500, 2500);
  CHECK(std::abs(amp2 - amp1) / amp1 < 0.02);
}

TEST_CASE("filtfilt handles very short signals") {
  const auto sections = design_butterworth_lowpass({20.0, 4}, 100.0);
  const std::vector<double> one{0.5};
  CHECK(filtfilt(sections, one, 12) == std::vector<double>{0.5});
  const std::vector<double> three{1.0, 1.0, 1.0};
  for (double v : filtfilt(sections, three, 12)) CHECK(v == doctest::Approx(1.0));
  CHECK(filtfilt(sections, std::vector<double>{}, 12).empty());
}

TEST_CASE("non-wear: two hours of constant signal is one interval") {
  const Recording r = testing::constant_recording(7200.0, 10.0, {0, 0, 1});
  const auto iv = detect_nonwear(r);
  REQUIRE(iv.size() == 1);
  CHECK(iv[0].start == r.t0);
  CHECK(iv[0].end == doctest::Approx(r.t0 + 7200.0));
}

TEST_CASE("non-wear: sixty constant minutes are not enough") {
  Recording r = testing::noisy_recording(5400.0, 10.0, 0.1, 1);
  for (std::size_t i = 0; i < 36000; ++i) r.samples[i] = {0, 0, 1};
  CHECK(detect_nonwear(r).empty());
}

TEST_CASE("non-wear: one active chunk breaks a 100 minute run") {
  Recording r = testing::constant_recording(6000.0, 10.0, {0, 0, 1});
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.1);
  for (std::size_t i = 30000; i < 30100; ++i) r.samples[i].x += n(rng);
  CHECK(detect_nonwear(r).empty());
}

TEST_CASE("non-wear: exactly ninety minutes qualifies and chunk edges are exact") {
  Recording r = testing::noisy_recording(7200.0, 10.0, 0.1, 2);
  // Minutes 10 to 100 constant.
  for (std::size_t i = 6000; i < 60000; ++i) r.samples[i] = {0.1, 0.2, 0.97};
  const auto iv = detect_nonwear(r);
  REQUIRE(iv.size() == 1);
  CHECK(iv[0].start == doctest::Approx(r.t0 + 600.0));
  CHECK(iv[0].end == doctest::Approx(r.t0 + 6000.0));
}

TEST_CASE("non-wear detection is translation invariant") {
  Recording r = testing::noisy_recording(7200.0, 10.0, 0.1, 3, 1000.0);
  for (std::size_t i = 3000; i < 63000; ++i) r.samples[i] = {0, 0, 1};
  const auto a = detect_nonwear(r);
  r.t0 += 12345.5;
  const auto b = detect_nonwear(r);
  REQUIRE(a.size() == 1);
  REQUIRE(b.size() == 1);
  CHECK(b[0].start - a[0].start == doctest::Approx(12345.5));
  CHECK(b[0].end - a[0].end == doctest::Approx(12345.5));
}

TEST_CASE("non-wear rule validation and stationary test") {
  const Recording r = testing::constant_recording(100.0, 10.0, {0, 0, 1});
  CHECK_THROWS_AS(detect_nonwear(r, {0.015, 5.0, 10.0}), ConfigurationError);
  ChunkStats c;
  c.sd = {0.01, 0.014, 0.0149};
  CHECK(is_stationary(c, 0.015));
  c.sd.z = 0.015;
  CHECK_FALSE(is_stationary(c, 0.015));
}

TEST_CASE("remove_nonwear marks samples and windowing skips them") {
  const Recording r = testing::noisy_recording(3 * 3600.0, 10.0, 0.1, 4);
  const std::vector<TimeInterval> none;
  const Recording same = remove_nonwear(r, none);
  CHECK(same.samples == r.samples);
  CHECK(make_windows(same).size() == 360);

  const std::vector<TimeInterval> full{{r.t0, r.end_time()}};
  const Recording all = remove_nonwear(r, full);
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all.is_excluded(i));
  CHECK(make_windows(all).empty());

  const std::vector<TimeInterval> mid{{r.t0 + 600.0, r.t0 + 6000.0}};
  const Recording part = remove_nonwear(r, mid);
  const auto windows = make_windows(part);
  CHECK(windows.size() == 20 + 160);
  for (const Window& w : windows) {
    const bool before = w.start_time + 30.0 <= r.t0 + 600.0 + 1e-9;
    const bool after = w.start_time >= r.t0 + 6000.0 - 1e-9;
    CHECK((before || after));
  }

  const std::vector<TimeInterval> overlap{{r.t0, r.t0 + 100.0}, {r.t0 + 50.0, r.t0 + 200.0}};
  CHECK_THROWS_AS(remove_nonwear(r, overlap), InputError);
}

TEST_CASE("sphere fit: identity fixed point") {
  std::mt19937_64 rng(11);
  const auto pts = sphere_points(60, rng);
  const SphereFit fit = fit_unit_sphere(pts);
  for (int a = 0; a < 3; ++a) {
    CHECK(fit.gain[a] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(fit.offset[a]) < 1e-9);
  }
  CHECK(fit.final_residual < 1e-6);
}

TEST_CASE("sphere fit recovers a known x offset") {
  std::mt19937_64 rng(12);
  auto pts = sphere_points(60, rng);
  for (auto& p : pts) p.x += 0.1;
  const SphereFit fit = fit_unit_sphere(pts);
  CHECK(std::abs(fit.offset[0] + 0.1) < 1e-3);
  CHECK(std::abs(fit.gain[0] - 1.0) < 1e-3);
  CHECK(fit.final_residual < fit.initial_residual);
  CHECK(unit_sphere_residual(pts, fit.gain, fit.offset) == doctest::Approx(fit.final_residual));
}

TEST_CASE("autocalibrate needs enough stationary chunks") {
  Recording r = testing::noisy_recording(600.0, 10.0, 0.1, 13);
  // Only two quiet 10 s chunks.
  for (std::size_t i = 0; i < 200; ++i) r.samples[i] = {0.3, 0.3, 0.9};
  const auto [out, report] = autocalibrate(r);
  CHECK_FALSE(report.applied);
  CHECK(report.n_stationary == 2);
  CHECK(out.samples == r.samples);
  CHECK_FALSE(report.reason.empty());
}

TEST_CASE("autocalibrate corrects a distorted multi-orientation recording") {
  std::mt19937_64 rng(14);
  const auto orient = sphere_points(24, rng);
  const Vec3 true_gain{1.05, 0.95, 1.02};
  const Vec3 true_offset{0.05, -0.03, 0.02};
  Recording r = testing::constant_recording(24 * 20.0, 10.0, {0, 0, 1});
  std::normal_distribution<double> noise(0.0, 0.002);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Accel& g = orient[i / 200];
    // raw such that offset + gain * raw lands on the sphere: raw = (g - offset) / gain.
    r.samples[i] = {(g.x - true_offset[0]) / true_gain[0] + noise(rng),
                    (g.y - true_offset[1]) / true_gain[1] + noise(rng),
                    (g.z - true_offset[2]) / true_gain[2] + noise(rng)};
  }
  const auto [out, report] = autocalibrate(r);
  REQUIRE(report.applied);
  CHECK(report.n_stationary == 48);
  for (int a = 0; a < 3; ++a) {
    CHECK(report.gain[a] == doctest::Approx(true_gain[a]).epsilon(5e-3));
    CHECK(report.offset[a] == doctest::Approx(true_offset[a]).epsilon(5e-3).scale(1.0));
  }
  CHECK(report.final_residual <= report.initial_residual);
  CHECK(out.samples[0].x == doctest::Approx(report.offset[0] + report.gain[0] * r.samples[0].x));
}

TEST_CASE("calibration never worsens the residual when applied") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> gain(0.9, 1.1), off(-0.1, 0.1);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = sphere_points(40, rng);
    const double gx = gain(rng), ox = off(rng), gy = gain(rng), oy = off(rng);
    for (auto& p : pts) {
      p.x = p.x * gx + ox;
      p.y = p.y * gy + oy;
    }
    const SphereFit fit = fit_unit_sphere(pts);
    CHECK(fit.final_residual <= fit.initial_residual);
  }
}

TEST_CASE("make_windows: majority labels and shapes") {
  const Recording sleep = labelled(90.0, 100.0, {{90.0, IntensityLabel::Sleep}});
  const auto w = make_windows(sleep);
  REQUIRE(w.size() == 3);
  for (const Window& win : w) {
    CHECK(win.samples.size() == 3000);
    CHECK(win.label == IntensityLabel::Sleep);
    CHECK(win.label_coverage == 1.0);
  }
  CHECK(w[1].start_time == doctest::Approx(sleep.t0 + 30.0));

  const Recording mix =
      labelled(30.0, 100.0, {{16.0, IntensityLabel::Sedentary}, {14.0, IntensityLabel::Light}});
  const auto m = make_windows(mix);
  REQUIRE(m.size() == 1);
  CHECK(m[0].label == IntensityLabel::Sedentary);
  CHECK(m[0].label_coverage == doctest::Approx(16.0 / 30.0));

  const Recording sparse = labelled(30.0, 100.0, {{10.0, IntensityLabel::Light}, {20.0, std::nullopt}});
  const auto s = make_windows(sparse);
  REQUIRE(s.size() == 1);
  CHECK_FALSE(s[0].label.has_value());
  CHECK(s[0].label_coverage == doctest::Approx(1.0 / 3.0));

  const Recording tie = labelled(30.0, 100.0, {{15.0, IntensityLabel::Light}, {15.0, IntensityLabel::Sleep}});
  CHECK(make_windows(tie)[0].label == IntensityLabel::Sleep);
  CHECK(make_windows(tie)[0].label == make_windows(tie)[0].label);
}

TEST_CASE("make_windows counts and configuration errors") {
  const Recording r = testing::constant_recording(95.5, 100.0, {0, 0, 1});
  CHECK(make_windows(r).size() == 3);
  CHECK(make_windows(r, {10.0, 0.5}).size() == 9);
  CHECK_THROWS_AS(make_windows(r, {30.005, 0.5}), ConfigurationError);
  CHECK_THROWS_AS(make_windows(r, {0.0, 0.5}), ConfigurationError);
  // Unlabelled recordings give unlabelled windows.
  for (const Window& w : make_windows(r)) CHECK_FALSE(w.label.has_value());
}

TEST_CASE("windows round-trip losslessly") {
  testing::TempDir dir("windows");
  Recording r = testing::noisy_recording(90.0, 100.0, 0.2, 21);
  r.labels.assign(r.size(), IntensityLabel::Light);
  const auto windows = make_windows(r);
  write_windows(dir / "w.csv", dir / "s.csv", windows);
  const auto back = read_windows(dir / "w.csv", dir / "s.csv");
  REQUIRE(back.size() == windows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].participant_id == windows[i].participant_id);
    CHECK(back[i].start_time == windows[i].start_time);
    CHECK(back[i].label == windows[i].label);
    CHECK(back[i].samples == windows[i].samples);
  }
}
