#include "wristhar/nonwear.hpp"

#include <algorithm>
#include <cmath>

#include "wristhar/errors.hpp"

namespace wristhar {

std::vector<ChunkStats> chunk_statistics(const Recording& recording, double chunk_s) {
  validate(recording);
  if (!(chunk_s > 0.0)) throw ConfigurationError("chunk length must be positive");
  const auto chunk = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(chunk_s * recording.sample_rate_hz)));
  std::vector<ChunkStats> out;
  const std::size_t n = recording.size();
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    ChunkStats c;
    c.begin = begin;
    c.end = std::min(n, begin + chunk);
    const double count = static_cast<double>(c.end - c.begin);
    double sx = 0, sy = 0, sz = 0;
    for (std::size_t i = c.begin; i < c.end; ++i) {
      const Accel& a = recording.samples[i];
      sx += a.x;
      sy += a.y;
      sz += a.z;
      if (recording.is_excluded(i)) c.touches_excluded = true;
    }
    c.mean = {sx / count, sy / count, sz / count};
    double vx = 0, vy = 0, vz = 0;
    for (std::size_t i = c.begin; i < c.end; ++i) {
      const Accel& a = recording.samples[i];
      vx += (a.x - c.mean.x) * (a.x - c.mean.x);
      vy += (a.y - c.mean.y) * (a.y - c.mean.y);
      vz += (a.z - c.mean.z) * (a.z - c.mean.z);
    }
    c.sd = {std::sqrt(vx / count), std::sqrt(vy / count), std::sqrt(vz / count)};
    out.push_back(c);
  }
  return out;
}

bool is_stationary(const ChunkStats& chunk, double sd_threshold_g) {
  return chunk.sd.x < sd_threshold_g && chunk.sd.y < sd_threshold_g &&
         chunk.sd.z < sd_threshold_g;
}

std::vector<TimeInterval> detect_nonwear(const Recording& recording, const NonwearRule& rule) {
  if (!(rule.sd_threshold_g > 0.0) || !(rule.window_s > 0.0) ||
      rule.min_duration_s < rule.window_s) {
    throw ConfigurationError("non-wear rule needs positive threshold/window and min_duration >= window");
  }
  const auto chunks = chunk_statistics(recording, rule.window_s);
  std::vector<TimeInterval> out;
  std::size_t i = 0;
  while (i < chunks.size()) {
    if (!is_stationary(chunks[i], rule.sd_threshold_g)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < chunks.size() && is_stationary(chunks[j], rule.sd_threshold_g)) ++j;
    const std::size_t first = chunks[i].begin;
    const std::size_t last = chunks[j - 1].end;
    const double seconds = static_cast<double>(last - first) / recording.sample_rate_hz;
    if (seconds >= rule.min_duration_s - 1e-9) {
      out.push_back({recording.time_at(first), recording.time_at(last)});
    }
    i = j;
  }
  return out;
}

Recording remove_nonwear(const Recording& recording, std::span<const TimeInterval> intervals) {
  validate(recording);
  std::vector<TimeInterval> sorted(intervals.begin(), intervals.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const TimeInterval& a, const TimeInterval& b) { return a.start < b.start; });
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (!(sorted[k].end >= sorted[k].start)) throw InputError("interval ends before it starts");
    if (k > 0 && sorted[k].start < sorted[k - 1].end) {
      throw InputError("non-wear intervals overlap");
    }
  }
  Recording out = recording;
  if (sorted.empty()) return out;
  const std::size_t n = recording.size();
  if (out.excluded.empty()) out.excluded.assign(n, 0);
  const double fs = recording.sample_rate_hz;
  const auto to_index = [&](double t) {
    const double pos = std::ceil((t - recording.t0) * fs - 1e-9);
    return static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(n)));
  };
  for (const TimeInterval& iv : sorted) {
    const std::size_t begin = to_index(iv.start);
    const std::size_t end = to_index(iv.end);
    for (std::size_t i = begin; i < end; ++i) out.excluded[i] = 1;
  }
  return out;
}

}  // namespace wristhar
