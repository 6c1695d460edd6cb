#include "wristhar/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include "wristhar/csv.hpp"
#include "wristhar/errors.hpp"

namespace wristhar {

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static const std::array<std::string_view, kFeatureCount> names = {
      // moments
      "x_mean", "x_sd", "x_skew", "x_kurt", "x_min", "x_max",
      "y_mean", "y_sd", "y_skew", "y_kurt", "y_min", "y_max",
      "z_mean", "z_sd", "z_skew", "z_kurt", "z_min", "z_max",
      "norm_mean", "norm_sd", "norm_skew", "norm_kurt", "norm_min", "norm_max",
      // quartiles
      "norm_q25", "norm_median", "norm_q75",
      // correlation
      "corr_xy", "corr_xz", "corr_yz",
      "autocorr1_x", "autocorr1_y", "autocorr1_z", "autocorr1_norm",
      // orientation
      "roll_mean", "roll_sd", "pitch_mean", "pitch_sd", "yaw_mean", "yaw_sd",
      // spectrum of the norm
      "fft_dom_freq", "fft_dom_power", "fft_dom2_freq", "fft_dom2_power",
      "fft_entropy", "fft_total_power",
      "fft_band_0p3_1", "fft_band_1_3", "fft_band_3_5", "fft_band_5_8", "fft_band_8_15",
      // peaks
      "peaks_count", "peaks_mean_prominence",
      // spread and power
      "norm_mad", "norm_iqr", "norm_range", "norm_mean_crossings",
      "power_x", "power_y", "power_z",
      // truncated norm
      "enmo_mean", "enmo_sd", "sma",
  };
  return names;
}

namespace {

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

// Plans are cached per length; the FFTW planner is not thread-safe but
// executing an existing plan on new arrays is.
class FftPlans {
 public:
  fftw_plan plan_for(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(static_cast<std::size_t>(n)));
    std::unique_ptr<fftw_complex, FftwDeleter> out(
        fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1)));
    fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.get(), out.get(), FFTW_ESTIMATE);
    plans_.emplace(n, plan);
    return plan;
  }

  ~FftPlans() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<int, fftw_plan> plans_;
};

FftPlans& fft_plans() {
  static FftPlans plans;
  return plans;
}

struct Moments {
  double mean = 0, sd = 0, skew = 0, kurt = 0, min = 0, max = 0;
};

bool degenerate_variance(double var, double mean) { return var <= 1e-20 * (1.0 + mean * mean); }

Moments moments(std::span<const double> s) {
  Moments m;
  const auto n = static_cast<double>(s.size());
  m.mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  m.min = *lo;
  m.max = *hi;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : s) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (degenerate_variance(m2, m.mean)) return m;
  m.sd = std::sqrt(m2);
  m.skew = m3 / (m2 * m.sd);
  m.kurt = m4 / (m2 * m2) - 3.0;
  return m;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (degenerate_variance(saa / n, ma) || degenerate_variance(sbb / n, mb)) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double lag1_autocorr(std::span<const double> s) {
  const auto n = static_cast<double>(s.size());
  const double m = std::accumulate(s.begin(), s.end(), 0.0) / n;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = s[i] - m;
    den += d * d;
    if (i + 1 < s.size()) num += d * (s[i + 1] - m);
  }
  if (degenerate_variance(den / n, m)) return 0.0;
  return std::clamp(num / den, -1.0, 1.0);
}

// Linear-interpolated quantile of sorted data (numpy's default definition).
double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Local maxima above mean + 1 SD and their topographic prominence.
std::pair<double, double> peak_stats(std::span<const double> s, double mean, double sd) {
  if (sd <= 0.0 || s.size() < 3) return {0.0, 0.0};
  const double height = mean + sd;
  std::size_t count = 0;
  double prominence_sum = 0.0;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (!(s[i] > s[i - 1] && s[i] >= s[i + 1] && s[i] > height)) continue;
    double left_min = s[i];
    for (std::size_t j = i; j-- > 0;) {
      if (s[j] > s[i]) break;
      left_min = std::min(left_min, s[j]);
    }
    double right_min = s[i];
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      if (s[j] > s[i]) break;
      right_min = std::min(right_min, s[j]);
    }
    prominence_sum += s[i] - std::max(left_min, right_min);
    ++count;
  }
  if (count == 0) return {0.0, 0.0};
  return {static_cast<double>(count), prominence_sum / static_cast<double>(count)};
}

}  // namespace

std::vector<double> power_spectrum(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 2) return std::vector<double>(n / 2 + 1, 0.0);
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(n / 2 + 1));
  for (std::size_t i = 0; i < n; ++i) {
    const double taper =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
    in.get()[i] = (series[i] - mean) * taper;
  }
  fftw_execute_dft_r2c(fft_plans().plan_for(static_cast<int>(n)), in.get(), out.get());
  std::vector<double> power(n / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double re = out.get()[k][0];
    const double im = out.get()[k][1];
    power[k] = (re * re + im * im) / static_cast<double>(n);
  }
  return power;
}

FeatureVector extract_features(std::span<const Accel> samples, double sample_rate_hz) {
  if (samples.empty()) throw InputError("cannot featurize an empty window");
  if (!(sample_rate_hz > 0.0)) throw InputError("window sample rate must be positive");
  const std::size_t n = samples.size();
  const auto nd = static_cast<double>(n);
  std::vector<double> x(n), y(n), z(n), v(n), enmo(n);
  double power_x = 0, power_y = 0, power_z = 0, sma = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Accel& a = samples[i];
    x[i] = a.x;
    y[i] = a.y;
    z[i] = a.z;
    v[i] = std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z);
    enmo[i] = std::max(v[i] - 1.0, 0.0);
    power_x += a.x * a.x;
    power_y += a.y * a.y;
    power_z += a.z * a.z;
    sma += std::abs(a.x) + std::abs(a.y) + std::abs(a.z);
  }

  FeatureVector f{};
  std::size_t k = 0;
  const auto push = [&](double value) { f[k++] = value; };

  const Moments mv = moments(v);
  for (const Moments& m : {moments(x), moments(y), moments(z), mv}) {
    push(m.mean);
    push(m.sd);
    push(m.skew);
    push(m.kurt);
    push(m.min);
    push(m.max);
  }

  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  const double q25 = quantile_sorted(sorted, 0.25);
  const double q75 = quantile_sorted(sorted, 0.75);
  push(q25);
  push(quantile_sorted(sorted, 0.5));
  push(q75);

  push(pearson(x, y));
  push(pearson(x, z));
  push(pearson(y, z));
  push(lag1_autocorr(x));
  push(lag1_autocorr(y));
  push(lag1_autocorr(z));
  push(lag1_autocorr(v));

  std::vector<double> roll(n), pitch(n), yaw(n);
  for (std::size_t i = 0; i < n; ++i) {
    roll[i] = std::atan2(y[i], z[i]);
    pitch[i] = std::atan2(x[i], z[i]);
    yaw[i] = std::atan2(y[i], x[i]);
  }
  for (const auto* s : {&roll, &pitch, &yaw}) {
    const Moments m = moments(*s);
    push(m.mean);
    push(m.sd);
  }

  // Spectrum of the norm; bin 0 (DC) is excluded everywhere below.
  const std::vector<double> power = power_spectrum(v);
  const double bin_hz = sample_rate_hz / nd;
  double total = 0.0;
  for (std::size_t b = 1; b < power.size(); ++b) total += power[b];
  std::array<double, 11> spectral{};
  if (power.size() > 1 && mv.sd > 0.0 && total > 0.0) {
    std::size_t dom = 1;
    for (std::size_t b = 2; b < power.size(); ++b) {
      if (power[b] > power[dom]) dom = b;
    }
    std::size_t dom2 = 0;
    for (std::size_t b = 1; b < power.size(); ++b) {
      if (b == dom) continue;
      const bool left_ok = b == 1 || power[b] > power[b - 1];
      const bool right_ok = b + 1 == power.size() || power[b] >= power[b + 1];
      if (left_ok && right_ok && (dom2 == 0 || power[b] > power[dom2])) dom2 = b;
    }
    double entropy = 0.0;
    for (std::size_t b = 1; b < power.size(); ++b) {
      const double p = power[b] / total;
      if (p > 0.0) entropy -= p * std::log(p);
    }
    const double bins = static_cast<double>(power.size() - 1);
    spectral[0] = static_cast<double>(dom) * bin_hz;
    spectral[1] = power[dom];
    spectral[2] = dom2 == 0 ? 0.0 : static_cast<double>(dom2) * bin_hz;
    spectral[3] = dom2 == 0 ? 0.0 : power[dom2];
    spectral[4] = bins > 1.0 ? entropy / std::log(bins) : 0.0;
    spectral[5] = total;
    constexpr std::array<std::pair<double, double>, 5> bands = {
        {{0.3, 1.0}, {1.0, 3.0}, {3.0, 5.0}, {5.0, 8.0}, {8.0, 15.0}}};
    for (std::size_t band = 0; band < bands.size(); ++band) {
      double sum = 0.0;
      for (std::size_t b = 1; b < power.size(); ++b) {
        const double freq = static_cast<double>(b) * bin_hz;
        if (freq >= bands[band].first && freq < bands[band].second) sum += power[b];
      }
      spectral[6 + band] = sum;
    }
  }
  for (double s : spectral) push(s);

  const auto [peaks, prominence] = peak_stats(v, mv.mean, mv.sd);
  push(peaks);
  push(prominence);

  double mad = 0.0;
  std::size_t crossings = 0;
  int previous_sign = 0;
  for (double value : v) {
    const double d = value - mv.mean;
    mad += std::abs(d);
    const int sign = d > 0.0 ? 1 : d < 0.0 ? -1 : 0;
    if (sign != 0 && previous_sign != 0 && sign != previous_sign) ++crossings;
    if (sign != 0) previous_sign = sign;
  }
  push(mv.sd > 0.0 ? mad / nd : 0.0);
  push(q75 - q25);
  push(mv.max - mv.min);
  push(mv.sd > 0.0 ? static_cast<double>(crossings) : 0.0);
  push(power_x / nd);
  push(power_y / nd);
  push(power_z / nd);

  const Moments me = moments(enmo);
  push(me.mean);
  push(me.sd);
  push(sma / nd);

  for (double& value : f) {
    if (!std::isfinite(value)) value = 0.0;
  }
  return f;
}

FeatureRow featurize(const Window& window) {
  return {window.participant_id, window.start_time, window.label, extract_features(window)};
}

void write_feature_csv(const std::filesystem::path& path, const std::vector<FeatureRow>& rows) {
  std::string out = "pid,start_time,label";
  for (std::string_view name : feature_names()) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (const FeatureRow& row : rows) {
    out += csv::escape(row.participant_id) + "," + csv::format_double(row.start_time) + "," +
           (row.label ? std::string(label_name(*row.label)) : std::string());
    for (double value : row.values) {
      out += ',';
      out += csv::format_double(value);
    }
    out += '\n';
  }
  csv::write_file(path, out);
}

std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path) {
  const std::string content = csv::read_file(path);
  csv::Cursor cursor(content);
  std::vector<std::string> f;
  if (!cursor.next(f)) throw EmptyInputError(path.string() + ": feature file is empty");
  if (f.size() != kFeatureCount + 3 || f[0] != "pid" || f[1] != "start_time" || f[2] != "label") {
    throw CompatibilityError(path.string() + ": feature header does not match " +
                             std::string(kFeatureManifestVersion));
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (f[i + 3] != feature_names()[i]) {
      throw CompatibilityError(path.string() + ": feature column " + std::to_string(i) + " is '" +
                               f[i + 3] + "', expected '" + std::string(feature_names()[i]) + "'");
    }
  }
  std::vector<FeatureRow> rows;
  while (cursor.next(f)) {
    if (f.size() != kFeatureCount + 3) {
      throw SchemaError(path.string() + ": line " + std::to_string(cursor.line_number()) +
                        " has the wrong number of fields");
    }
    FeatureRow row;
    row.participant_id = f[0];
    row.start_time = csv::parse_double(f[1], "start_time");
    row.label = parse_maybe_label(f[2]);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      row.values[i] = csv::parse_double(f[i + 3], feature_names()[i]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace wristhar
