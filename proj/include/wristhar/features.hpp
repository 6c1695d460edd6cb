#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wristhar/labels.hpp"
#include "wristhar/recording.hpp"
#include "wristhar/windows.hpp"

namespace wristhar {

inline constexpr std::size_t kFeatureCount = 63;

/// Bumped whenever the order or definition of any feature changes. Model
/// files record it so predictions refuse mismatched feature layouts.
inline constexpr std::string_view kFeatureManifestVersion = "wristhar-features-1";

using FeatureVector = std::array<double, kFeatureCount>;

/// Feature identifiers in output order (see docs/feature_manifest.md).
const std::array<std::string_view, kFeatureCount>& feature_names();

/// Handcrafted moment, correlation, orientation, spectral and peak features of
/// one window. Degenerate inputs map to 0 instead of NaN; the output is
/// always finite for finite input.
FeatureVector extract_features(std::span<const Accel> samples, double sample_rate_hz);

inline FeatureVector extract_features(const Window& window) {
  return extract_features(window.samples, window.sample_rate_hz);
}

/// One-sided power spectrum of a real series after mean removal and a
/// periodic Hann taper, normalized by the series length. Bin k sits at
/// k * fs / n Hz.
std::vector<double> power_spectrum(std::span<const double> series);

/// Feature row as persisted: metadata plus the 63 values.
struct FeatureRow {
  std::string participant_id;
  double start_time = 0.0;
  MaybeLabel label;
  FeatureVector values{};
};

FeatureRow featurize(const Window& window);

/// Header `pid,start_time,label,<feature names>`.
void write_feature_csv(const std::filesystem::path& path, const std::vector<FeatureRow>& rows);

/// Throws CompatibilityError when the header does not match feature_names().
std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path);

}  // namespace wristhar
