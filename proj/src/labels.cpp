#include "wristhar/labels.hpp"

#include <cctype>

#include "wristhar/errors.hpp"

namespace wristhar {

std::string_view label_name(IntensityLabel label) {
  switch (label) {
    case IntensityLabel::Sleep:
      return "sleep";
    case IntensityLabel::Sedentary:
      return "sedentary";
    case IntensityLabel::Light:
      return "light";
    case IntensityLabel::Mvpa:
      return "mvpa";
  }
  return "unknown";
}

std::string normalize_annotation(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  std::string out(text.substr(begin, end - begin));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

IntensityLabel parse_label(std::string_view text) {
  const std::string name = normalize_annotation(text);
  for (IntensityLabel label : kAllLabels) {
    if (name == label_name(label)) return label;
  }
  throw ParseError("unknown intensity label '" + std::string(text) + "'");
}

MaybeLabel parse_maybe_label(std::string_view text) {
  if (normalize_annotation(text).empty()) return std::nullopt;
  return parse_label(text);
}

IntensityLabel argmax_label(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size() && i < kNumLabels; ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return label_from_index(best);
}

}  // namespace wristhar
