#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "support.hpp"
#include "wristhar/errors.hpp"
#include "wristhar/features.hpp"
#include "wristhar/ingest.hpp"
#include "wristhar/nonwear.hpp"
#include "wristhar/synth.hpp"
#include "wristhar/windows.hpp"

using namespace wristhar;
using L = IntensityLabel;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SyntheticProfile short_profile() {
  SyntheticProfile p;
  p.sample_rate_hz = 50.0;
  p.awake_before_minutes = 10.0;
  p.awake_after_minutes = 10.0;
  p.sleep_min_minutes = 20.0;
  p.sleep_max_minutes = 25.0;
  return p;
}

}  // namespace

TEST_CASE("same seed gives identical bytes") {
  testing::TempDir dir("synth");
  const SyntheticProfile profile = short_profile();
  const auto a = generate_synthetic_cohort(1, 42, profile);
  const auto b = generate_synthetic_cohort(1, 42, profile);
  write_recording_csv(dir / "a.csv", a.recordings[0], 5);
  write_recording_csv(dir / "b.csv", b.recordings[0], 5);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  const auto c = generate_synthetic_cohort(1, 43, profile);
  CHECK(c.recordings[0].samples != a.recordings[0].samples);
  CHECK_THROWS_AS(generate_synthetic_cohort(0, 1, profile), InputError);
}

TEST_CASE("cohort structure") {
  SyntheticProfile profile = short_profile();
  profile.participants_without_mvpa = 1;
  const auto cohort = generate_synthetic_cohort(3, 7, profile);
  REQUIRE(cohort.recordings.size() == 3);
  REQUIRE(cohort.meta.size() == 3);
  CHECK(cohort.recordings[0].participant_id == "P001");
  CHECK(cohort.meta[2].participant_id == "P003");
  for (std::size_t p = 0; p < 3; ++p) {
    const Recording mapped = map_annotations(cohort.recordings[p], cohort.mapping);
    validate(mapped);
    std::set<L> present;
    std::size_t missing = 0;
    for (const MaybeLabel& l : mapped.labels) {
      if (l) present.insert(*l);
      else ++missing;
    }
    CHECK(missing == static_cast<std::size_t>(2 * 60 * 50));
    CHECK(present.count(L::Sleep) == 1);
    CHECK(present.count(L::Sedentary) == 1);
    CHECK(present.count(L::Light) == 1);
    CHECK(present.count(L::Mvpa) == (p == 0 ? 0u : 1u));
  }
}

TEST_CASE("sleep segments pass the stationary test") {
  SyntheticProfile profile = short_profile();
  profile.max_posture_changes = 0;
  const auto cohort = generate_synthetic_cohort(2, 9, profile);
  for (const Recording& raw : cohort.recordings) {
    const Recording r = map_annotations(raw, cohort.mapping);
    std::size_t sleep_chunks = 0;
    for (const ChunkStats& c : chunk_statistics(r, 10.0)) {
      bool all_sleep = true;
      for (std::size_t i = c.begin; i < c.end; ++i) all_sleep &= r.labels[i] == L::Sleep;
      if (!all_sleep) continue;
      ++sleep_chunks;
      CHECK(is_stationary(c, 0.015));
    }
    CHECK(sleep_chunks >= 100);
    // Sleep is shorter than the non-wear minimum, so nothing is flagged.
    CHECK(detect_nonwear(r).empty());
  }
}

TEST_CASE("mvpa windows oscillate between 2 and 4 Hz") {
  const auto cohort = generate_synthetic_cohort(3, 11, SyntheticProfile{});
  const auto dom = feature_names();
  std::size_t dom_index = 0;
  while (dom[dom_index] != "fft_dom_freq") ++dom_index;
  std::size_t mvpa_windows = 0;
  for (const Recording& raw : cohort.recordings) {
    const Recording r = map_annotations(raw, cohort.mapping);
    for (const Window& w : make_windows(r)) {
      if (w.label != L::Mvpa || w.label_coverage < 1.0) continue;
      ++mvpa_windows;
      const double f = extract_features(w)[dom_index];
      CHECK(f >= 2.0);
      CHECK(f <= 4.0);
    }
  }
  CHECK(mvpa_windows >= 10);
}
