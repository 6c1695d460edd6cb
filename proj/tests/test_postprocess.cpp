#include <doctest.h>

#include <random>

#include "wristhar/errors.hpp"
#include "wristhar/hmm.hpp"
#include "wristhar/postprocess.hpp"

using namespace wristhar;
using L = IntensityLabel;

namespace {

std::vector<L> run(L label, std::size_t n) { return std::vector<L>(n, label); }

std::vector<L> concat(std::initializer_list<std::vector<L>> parts) {
  std::vector<L> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

TEST_CASE("a sleep run of exactly one hour is kept") {
  const auto labels = concat({run(L::Light, 5), run(L::Sleep, 120), run(L::Sedentary, 5)});
  CHECK(sleep_block_correction(labels) == labels);
}

TEST_CASE("a sleep run one window short of an hour becomes sedentary") {
  const auto labels = concat({run(L::Light, 5), run(L::Sleep, 119), run(L::Light, 5)});
  const auto expected = concat({run(L::Light, 5), run(L::Sedentary, 119), run(L::Light, 5)});
  CHECK(sleep_block_correction(labels) == expected);
}

TEST_CASE("an isolated sleep window inside activity becomes sedentary") {
  const std::vector<L> labels{L::Mvpa, L::Light, L::Sleep, L::Light};
  CHECK(sleep_block_correction(labels) == std::vector<L>{L::Mvpa, L::Light, L::Sedentary, L::Light});
  CHECK(sleep_block_correction(std::vector<L>{}).empty());
}

TEST_CASE("window duration and threshold scale the rule") {
  const auto labels = run(L::Sleep, 60);
  CHECK(sleep_block_correction(labels, 60.0) == labels);
  CHECK(sleep_block_correction(labels, 30.0) == run(L::Sedentary, 60));
  CHECK(sleep_block_correction(labels, 30.0, 1800.0) == labels);
  CHECK_THROWS_AS(sleep_block_correction(labels, 0.0), ConfigurationError);
}

TEST_CASE("correction is idempotent and never touches non-sleep labels") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_int_distribution<std::size_t> len(1, 200);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<L> labels;
    while (labels.size() < 1000) {
      const auto more = run(label_from_index(static_cast<std::size_t>(pick(rng))), len(rng));
      labels.insert(labels.end(), more.begin(), more.end());
    }
    const auto once = sleep_block_correction(labels);
    CHECK(sleep_block_correction(once) == once);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != L::Sleep) CHECK(once[i] == labels[i]);
      if (once[i] != labels[i]) CHECK(once[i] == L::Sedentary);
    }
    std::size_t sleep_in = 0, sleep_out = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      sleep_in += labels[i] == L::Sleep;
      sleep_out += once[i] == L::Sleep;
    }
    CHECK(sleep_out <= sleep_in);
  }
}

TEST_CASE("runs split by a time gap are judged separately") {
  LabeledSequence s;
  s.participant_id = "P";
  s.pred_labels = run(L::Sleep, 160);
  for (std::size_t i = 0; i < 160; ++i) {
    s.times.push_back(1000.0 + 30.0 * static_cast<double>(i) + (i >= 80 ? 7200.0 : 0.0));
  }
  // Two 40 minute blocks: each is short on its own.
  const auto split = sleep_block_correction(s);
  CHECK(split.pred_labels == run(L::Sedentary, 160));
  CHECK(split.times == s.times);

  s.times.clear();
  for (std::size_t i = 0; i < 160; ++i) s.times.push_back(1000.0 + 30.0 * static_cast<double>(i));
  CHECK(sleep_block_correction(s).pred_labels == run(L::Sleep, 160));
}
