#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace wristhar {

/// Activity-intensity classes. The underlying value is the canonical index
/// used for matrix rows/columns and for every tie-break in the library.
enum class IntensityLabel : int { Sleep = 0, Sedentary = 1, Light = 2, Mvpa = 3 };

inline constexpr std::size_t kNumLabels = 4;

inline constexpr std::array<IntensityLabel, kNumLabels> kAllLabels = {
    IntensityLabel::Sleep, IntensityLabel::Sedentary, IntensityLabel::Light,
    IntensityLabel::Mvpa};

/// A per-sample or per-window label that may be absent.
using MaybeLabel = std::optional<IntensityLabel>;

using ClassProbs = std::array<double, kNumLabels>;

constexpr std::size_t index_of(IntensityLabel label) {
  return static_cast<std::size_t>(label);
}

constexpr IntensityLabel label_from_index(std::size_t index) {
  return static_cast<IntensityLabel>(static_cast<int>(index));
}

std::string_view label_name(IntensityLabel label);

/// Parses "sleep", "sedentary", "light" or "mvpa" (trimmed, case-insensitive).
/// Throws ParseError on anything else.
IntensityLabel parse_label(std::string_view text);

/// Parses a label cell where an empty string means missing.
MaybeLabel parse_maybe_label(std::string_view text);

/// Argmax with ties broken toward the lower canonical index.
IntensityLabel argmax_label(std::span<const double> probs);

/// Trim surrounding whitespace and ASCII case-fold.
std::string normalize_annotation(std::string_view text);

}  // namespace wristhar
