#include "wristhar/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "wristhar/errors.hpp"

namespace wristhar {

namespace {

using Vec = std::array<double, 3>;

constexpr std::array<std::array<const char*, 3>, kNumLabels> kVocabulary = {{
    {"7030 sleeping", "sleeping", "sleeping;lying in bed"},
    {"sitting;desk work", "watching television", "sitting;reading"},
    {"walking;household chores", "standing;cooking", "walking;shopping"},
    {"running", "cycling;vigorous effort", "sports;football"},
}};

Vec normalized(const Vec& v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

Vec cross(const Vec& a, const Vec& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    const Vec v{n(rng), n(rng), n(rng)};
    if (dot(v, v) > 1e-6) return normalized(v);
  }
}

Vec rotate(const Vec& v, const Vec& axis, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const Vec uxv = cross(axis, v);
  const double uv = dot(axis, v);
  Vec out{};
  for (int i = 0; i < 3; ++i) out[i] = v[i] * c + uxv[i] * s + axis[i] * uv * (1.0 - c);
  return out;
}

struct Segment {
  IntensityLabel label = IntensityLabel::Sedentary;
  bool annotated = true;
  std::size_t samples = 0;
};

class ParticipantGenerator {
 public:
  ParticipantGenerator(const SyntheticProfile& profile, std::mt19937_64& rng)
      : p_(profile), rng_(rng) {}

  void awake_block(double minutes, bool with_mvpa, std::vector<Segment>& out) {
    std::vector<IntensityLabel> pending = {IntensityLabel::Sedentary, IntensityLabel::Light};
    if (with_mvpa) pending.push_back(IntensityLabel::Mvpa);
    std::shuffle(pending.begin(), pending.end(), rng_);
    const double min_s = p_.segment_min_minutes * 60.0;
    double remaining = std::round(minutes * 60.0);
    std::uniform_real_distribution<double> dur(min_s, p_.segment_max_minutes * 60.0);
    std::discrete_distribution<int> pick(
        {0.0, 0.5, 0.35, with_mvpa ? 0.15 : 0.0});
    MaybeLabel prev;
    while (remaining > 0.0) {
      IntensityLabel label;
      if (!pending.empty()) {
        label = pending.back();
        pending.pop_back();
        if (prev && label == *prev && !pending.empty()) std::swap(label, pending.back());
      } else {
        label = label_from_index(static_cast<std::size_t>(pick(rng_)));
        if (prev && label == *prev) {
          label = label == IntensityLabel::Sedentary ? IntensityLabel::Light
                                                     : IntensityLabel::Sedentary;
        }
      }
      double seconds = std::round(dur(rng_));
      // Leave room for the classes still pending.
      const double reserve = static_cast<double>(pending.size()) * min_s;
      if (remaining - seconds < reserve) seconds = std::max(min_s, remaining - reserve);
      if (remaining - seconds < min_s) seconds = remaining;
      remaining -= seconds;
      out.push_back({label, true, to_samples(seconds)});
      prev = label;
    }
  }

  std::size_t to_samples(double seconds) const {
    return static_cast<std::size_t>(std::llround(seconds * p_.sample_rate_hz));
  }

  void render(const Segment& seg, Recording& rec) {
    const double fs = p_.sample_rate_hz;
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const auto emit = [&](const Vec& a, double noise) {
      rec.samples.push_back({a[0] + noise * unit(rng_), a[1] + noise * unit(rng_),
                             a[2] + noise * unit(rng_)});
    };
    const std::string annotation =
        seg.annotated ? kVocabulary[index_of(seg.label)][std::uniform_int_distribution<int>(
                            0, 2)(rng_)]
                      : std::string();
    rec.annotations.insert(rec.annotations.end(), seg.samples, annotation);

    switch (seg.label) {
      case IntensityLabel::Sleep: {
        // Piecewise constant posture with short transitions between postures.
        const int changes = std::uniform_int_distribution<int>(0, p_.max_posture_changes)(rng_);
        std::vector<std::size_t> at;
        std::uniform_int_distribution<std::size_t> where(0, seg.samples - 1);
        for (int c = 0; c < changes; ++c) at.push_back(where(rng_));
        std::sort(at.begin(), at.end());
        Vec posture = random_unit(rng_);
        Vec next = posture;
        const std::size_t ramp = to_samples(5.0);
        std::size_t change = 0;
        std::size_t ramp_start = 0;
        bool ramping = false;
        for (std::size_t i = 0; i < seg.samples; ++i) {
          if (!ramping && change < at.size() && i == at[change]) {
            next = random_unit(rng_);
            ramping = true;
            ramp_start = i;
            ++change;
          }
          Vec g = posture;
          if (ramping) {
            const double w = static_cast<double>(i - ramp_start) / static_cast<double>(ramp);
            if (w >= 1.0) {
              posture = next;
              ramping = false;
              g = posture;
            } else {
              Vec mix{};
              for (int k = 0; k < 3; ++k) mix[k] = (1.0 - w) * posture[k] + w * next[k];
              g = dot(mix, mix) > 1e-6 ? normalized(mix) : next;
            }
          }
          emit(g, p_.sleep_noise_g);
        }
        break;
      }
      case IntensityLabel::Sedentary: {
        const Vec base = random_unit(rng_);
        Vec axis = random_unit(rng_);
        const Vec across = cross(base, axis);
        axis = dot(across, across) > 1e-6 ? normalized(across) : random_unit(rng_);
        const double phi = phase(rng_);
        const double w = 2.0 * std::numbers::pi / p_.sedentary_drift_period_s;
        for (std::size_t i = 0; i < seg.samples; ++i) {
          const double t = static_cast<double>(i) / fs;
          emit(rotate(base, axis, p_.sedentary_drift_rad * std::sin(w * t + phi)),
               p_.sedentary_noise_g);
        }
        break;
      }
      case IntensityLabel::Light:
      case IntensityLabel::Mvpa: {
        const bool light = seg.label == IntensityLabel::Light;
        const double amp = light ? p_.light_amplitude_g : p_.mvpa_amplitude_g;
        const double f = std::uniform_real_distribution<double>(
            light ? p_.light_min_hz : p_.mvpa_min_hz, light ? p_.light_max_hz : p_.mvpa_max_hz)(rng_);
        const Vec g = random_unit(rng_);
        const Vec r = random_unit(rng_);
        Vec d{};
        for (int k = 0; k < 3; ++k) d[k] = 0.7 * g[k] + 0.3 * r[k];
        d = dot(d, d) > 1e-6 ? normalized(d) : g;
        const double phi = phase(rng_);
        const double noise = light ? 0.01 : 0.02;
        for (std::size_t i = 0; i < seg.samples; ++i) {
          const double s = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phi);
          emit({g[0] + s * d[0], g[1] + s * d[1], g[2] + s * d[2]}, noise);
        }
        break;
      }
    }
  }

 private:
  const SyntheticProfile& p_;
  std::mt19937_64& rng_;
};

}  // namespace

SyntheticCohort generate_synthetic_cohort(std::size_t n_participants, std::uint64_t seed,
                                          const SyntheticProfile& profile) {
  if (n_participants == 0) throw InputError("synthetic cohort needs at least one participant");
  if (!(profile.sample_rate_hz > 0.0)) throw InputError("sample rate must be positive");
  if (!(profile.segment_min_minutes > 0.0) ||
      profile.segment_max_minutes < profile.segment_min_minutes) {
    throw InputError("invalid synthetic segment durations");
  }
  if (profile.sleep_max_minutes < profile.sleep_min_minutes || profile.sleep_min_minutes <= 0.0) {
    throw InputError("invalid synthetic sleep durations");
  }

  SyntheticCohort cohort;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    for (const char* text : kVocabulary[c]) cohort.mapping.add(text, label_from_index(c));
  }

  for (std::size_t p = 0; p < n_participants; ++p) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32)};
    std::mt19937_64 rng(seq);
    ParticipantGenerator gen(profile, rng);
    const bool with_mvpa = p >= profile.participants_without_mvpa;

    std::vector<Segment> schedule;
    gen.awake_block(profile.awake_before_minutes, with_mvpa, schedule);
    const double sleep_minutes = std::uniform_real_distribution<double>(
        profile.sleep_min_minutes, profile.sleep_max_minutes)(rng);
    schedule.push_back(
        {IntensityLabel::Sleep, true, gen.to_samples(std::round(sleep_minutes * 60.0))});
    const std::size_t after_start = schedule.size();
    gen.awake_block(profile.awake_after_minutes, with_mvpa, schedule);
    if (profile.unannotated_minutes > 0.0) {
      const auto at = static_cast<std::ptrdiff_t>(std::min(after_start + 1, schedule.size()));
      schedule.insert(schedule.begin() + at,
                      Segment{IntensityLabel::Sedentary, false,
                              gen.to_samples(std::round(profile.unannotated_minutes * 60.0))});
    }

    Recording rec;
    char name[32];
    std::snprintf(name, sizeof name, "P%03zu", p + 1);
    rec.participant_id = name;
    rec.sample_rate_hz = profile.sample_rate_hz;
    rec.t0 = profile.start_epoch_s + static_cast<double>(p) * 86400.0;
    for (const Segment& seg : schedule) gen.render(seg, rec);
    cohort.recordings.push_back(std::move(rec));

    SubjectMeta meta;
    meta.participant_id = name;
    meta.age_band = static_cast<AgeBand>(p % 4);
    meta.sex = std::bernoulli_distribution(0.5)(rng) ? Sex::Male : Sex::Female;
    cohort.meta.push_back(meta);
  }
  return cohort;
}

}  // namespace wristhar
