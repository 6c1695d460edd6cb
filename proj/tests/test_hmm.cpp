#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "support.hpp"
#include "wristhar/errors.hpp"
#include "wristhar/hmm.hpp"
#include "wristhar/metrics.hpp"

using namespace wristhar;

namespace {

using L = IntensityLabel;

ClassProbs random_distribution(std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  ClassProbs p{};
  double s = 0.0;
  for (double& v : p) s += v = g(rng) + 1e-3;
  for (double& v : p) v /= s;
  return p;
}

HmmParams random_params(std::mt19937_64& rng) {
  HmmParams h;
  h.prior = random_distribution(rng);
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    h.transition[i] = random_distribution(rng);
    h.emission[i] = random_distribution(rng);
  }
  return h;
}

HmmParams sticky(double stay, double correct) {
  HmmParams h;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    h.prior[i] = 0.25;
    for (std::size_t j = 0; j < kNumLabels; ++j) {
      h.transition[i][j] = i == j ? stay : (1.0 - stay) / 3.0;
      h.emission[i][j] = i == j ? correct : (1.0 - correct) / 3.0;
    }
  }
  return h;
}

double joint_log_prob(const std::vector<std::size_t>& s, const std::vector<std::size_t>& o,
                      const HmmParams& h) {
  double lp = std::log(h.prior[s[0]]) + std::log(h.emission[s[0]][o[0]]);
  for (std::size_t t = 1; t < s.size(); ++t) {
    lp += std::log(h.transition[s[t - 1]][s[t]]) + std::log(h.emission[s[t]][o[t]]);
  }
  return lp;
}

std::vector<L> to_labels(const std::vector<std::size_t>& v) {
  std::vector<L> out;
  for (auto i : v) out.push_back(label_from_index(i));
  return out;
}

LabeledSequence sequence_of(std::vector<L> labels, double gap = 30.0) {
  LabeledSequence s;
  s.participant_id = "P";
  for (std::size_t i = 0; i < labels.size(); ++i) s.times.push_back(1000.0 + gap * static_cast<double>(i));
  s.pred_labels = std::move(labels);
  return s;
}

}  // namespace

TEST_CASE("apply_floor keeps a distribution and bounds entries") {
  const ClassProbs p{1.0, 0.0, 0.0, 0.0};
  const ClassProbs f = apply_floor(p, 0.01);
  CHECK(f[0] == doctest::Approx(0.97));
  CHECK(f[1] == doctest::Approx(0.01));
  double s = 0.0;
  for (double v : f) s += v;
  CHECK(s == doctest::Approx(1.0));
  CHECK(apply_floor(p, 0.0) == p);
}

TEST_CASE("prior is the floored label frequency") {
  const std::vector<L> y{L::Sleep, L::Sleep, L::Light, L::Mvpa};
  const ClassProbs p = train_prior(y, 1e-6);
  const double scale = 1.0 - 4e-6;
  CHECK(p[0] == doctest::Approx(1e-6 + scale * 0.5));
  CHECK(p[1] == doctest::Approx(1e-6));
  CHECK(p[2] == doctest::Approx(1e-6 + scale * 0.25));
  CHECK_THROWS_AS(train_prior(std::vector<L>{}), InputError);
}

TEST_CASE("transitions count contiguous labelled pairs plus sleep pseudo-counts") {
  LabeledSequence s;
  s.participant_id = "A";
  s.times = {0, 30, 60, 90, 150, 180, 210};
  s.true_labels = std::vector<MaybeLabel>{L::Sleep, L::Sleep, L::Sedentary, L::Sedentary,
                                          L::Light, std::nullopt, L::Light};
  s.pred_labels.assign(7, L::Sleep);
  const std::vector<LabeledSequence> seqs{s};
  const Matrix4 counts = count_transitions(seqs);
  CHECK(counts[0][0] == 1.0);
  CHECK(counts[0][1] == 1.0);
  CHECK(counts[1][1] == 1.0);
  CHECK(counts[1][2] == 0.0);  // 60 s gap
  CHECK(counts[2][2] == 0.0);  // missing label in between

  const Matrix4 a = train_transition(seqs, {0.0, 30.0, 0.5});
  CHECK(a[0][0] == doctest::Approx(1.0 / 3.0));
  CHECK(a[0][1] == doctest::Approx(2.0 / 3.0));
  CHECK(a[1][0] == doctest::Approx(0.5));
  CHECK(a[1][1] == doctest::Approx(0.5));
  CHECK(a[2][2] == 1.0);
  CHECK(a[3][3] == 1.0);

  const Matrix4 floored = train_transition(seqs);
  for (const auto& row : floored) {
    for (double v : row) CHECK(v >= kDefaultSmoothingFloor);
  }

  LabeledSequence lonely = s;
  lonely.times = {0, 100, 200, 300, 400, 500, 600};
  CHECK_THROWS_AS(train_transition(std::vector<LabeledSequence>{lonely}), DegenerateTrainingError);
}

TEST_CASE("emission rows average predicted probabilities per true class") {
  const std::vector<L> y{L::Sleep, L::Sleep, L::Light};
  const std::vector<ClassProbs> p{{0.8, 0.2, 0, 0}, {0.6, 0.4, 0, 0}, {0, 0.1, 0.9, 0}};
  const Matrix4 e = train_emission(y, p, 0.0);
  CHECK(e[0][0] == doctest::Approx(0.7));
  CHECK(e[0][1] == doctest::Approx(0.3));
  CHECK(e[2][1] == doctest::Approx(0.1));
  CHECK(e[2][2] == doctest::Approx(0.9));
  CHECK(e[1] == ClassProbs{0, 1, 0, 0});
  CHECK(e[3] == ClassProbs{0, 0, 0, 1});
  CHECK_THROWS_AS(train_emission(std::vector<L>{}, std::vector<ClassProbs>{}), DegenerateTrainingError);
  CHECK_THROWS_AS(train_emission(y, std::vector<ClassProbs>{{1, 0, 0, 0}}), InputError);
  const std::vector<ClassProbs> bad{{0.5, 0.2, 0, 0}, {0.6, 0.4, 0, 0}, {0, 0.1, 0.9, 0}};
  CHECK_THROWS_AS(train_emission(y, bad), InputError);
}

TEST_CASE("one-hot emission training reproduces the row-normalized confusion matrix") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  std::vector<L> truth, pred;
  std::vector<ClassProbs> probs;
  for (int i = 0; i < 500; ++i) {
    truth.push_back(label_from_index(pick(rng)));
    pred.push_back(label_from_index(pick(rng)));
    ClassProbs p{};
    p[index_of(pred.back())] = 1.0;
    probs.push_back(p);
  }
  const Matrix4 e = train_emission(truth, probs, 0.0);
  const ConfusionMatrix cm = confusion_matrix(truth, pred);
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    for (std::size_t j = 0; j < kNumLabels; ++j) {
      CHECK(e[i][j] == doctest::Approx(static_cast<double>(cm.counts[i][j]) /
                                       static_cast<double>(cm.row_total(i))));
    }
  }
}

TEST_CASE("viterbi with identity emission returns the observations") {
  HmmParams h = sticky(0.9, 1.0);
  const std::vector<L> obs{L::Sleep, L::Light, L::Light, L::Mvpa, L::Sedentary};
  CHECK(viterbi(obs, h) == obs);
  CHECK(viterbi(std::vector<L>{}, h).empty());
}

TEST_CASE("viterbi resolves ties toward the lower state index") {
  HmmParams h;
  h.prior = {0.1, 0.3, 0.3, 0.3};
  for (auto& row : h.transition) row = {0.1, 0.3, 0.3, 0.3};
  for (auto& row : h.emission) row = {0.25, 0.25, 0.25, 0.25};
  const std::vector<L> obs{L::Mvpa, L::Sleep, L::Light, L::Light, L::Mvpa};
  CHECK(viterbi(obs, h) == std::vector<L>(5, L::Sedentary));
}

TEST_CASE("viterbi removes a single-window flicker") {
  const HmmParams h = sticky(0.95, 0.8);
  std::vector<L> obs(10, L::Sedentary);
  obs.push_back(L::Light);
  obs.insert(obs.end(), 10, L::Sedentary);
  const auto path = viterbi(obs, h);
  for (L l : path) CHECK(l == L::Sedentary);
}

TEST_CASE("viterbi matches brute force on random models") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  std::uniform_int_distribution<std::size_t> length(1, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const HmmParams h = random_params(rng);
    const std::size_t n = length(rng);
    std::vector<std::size_t> o(n);
    for (auto& v : o) v = pick(rng);
    double best = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> s(n, 0);
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 4;
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t c = code;
      for (std::size_t t = 0; t < n; ++t, c /= 4) s[t] = c % 4;
      best = std::max(best, joint_log_prob(s, o, h));
    }
    const auto path = viterbi(to_labels(o), h);
    std::vector<std::size_t> pi;
    for (L l : path) pi.push_back(index_of(l));
    CHECK(joint_log_prob(pi, o, h) == doctest::Approx(best).epsilon(1e-12));
    CHECK(path_log_probability(path, to_labels(o), h) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("viterbi path is at least as probable as random paths") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  const HmmParams h = random_params(rng);
  std::vector<L> obs(200);
  for (auto& o : obs) o = label_from_index(pick(rng));
  const double best = path_log_probability(viterbi(obs, h), obs, h);
  for (int t = 0; t < 200; ++t) {
    std::vector<L> other(obs.size());
    for (auto& s : other) s = label_from_index(pick(rng));
    CHECK(path_log_probability(other, obs, h) <= best + 1e-9);
  }
}

TEST_CASE("relabelling states preserves the optimal path probability") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  const std::array<std::size_t, 4> sigma{2, 0, 3, 1};
  for (int trial = 0; trial < 50; ++trial) {
    const HmmParams h = random_params(rng);
    HmmParams p;
    for (std::size_t i = 0; i < 4; ++i) {
      p.prior[sigma[i]] = h.prior[i];
      for (std::size_t j = 0; j < 4; ++j) {
        p.transition[sigma[i]][sigma[j]] = h.transition[i][j];
        p.emission[sigma[i]][sigma[j]] = h.emission[i][j];
      }
    }
    std::vector<L> obs(30), mapped(30);
    for (std::size_t t = 0; t < obs.size(); ++t) {
      const std::size_t o = pick(rng);
      obs[t] = label_from_index(o);
      mapped[t] = label_from_index(sigma[o]);
    }
    const auto a = viterbi(obs, h);
    const auto b = viterbi(mapped, p);
    std::vector<L> mapped_a;
    for (L l : a) mapped_a.push_back(label_from_index(sigma[index_of(l)]));
    CAPTURE(trial);
    CHECK(path_log_probability(b, mapped, p) == doctest::Approx(path_log_probability(mapped_a, mapped, p)));
  }
}

TEST_CASE("smooth_sequence decodes contiguous segments independently") {
  HmmParams h = sticky(0.99, 0.7);
  std::vector<L> labels(20, L::Sedentary);
  labels.push_back(L::Light);

  const LabeledSequence joined = sequence_of(labels);
  const auto a = smooth_sequence(joined, h);
  CHECK(a.pred_labels.back() == L::Sedentary);

  LabeledSequence split = joined;
  split.times.back() += 3600.0;
  const auto starts = segment_starts(split.times, 30.0);
  CHECK(starts == std::vector<std::size_t>{0, 20});
  const auto b = smooth_sequence(split, h);
  CHECK(b.pred_labels.back() == L::Light);
  CHECK(b.times == split.times);
  for (std::size_t i = 0; i < 20; ++i) CHECK(b.pred_labels[i] == L::Sedentary);

  const LabeledSequence single = sequence_of({L::Mvpa});
  CHECK(smooth_sequence(single, h).pred_labels == std::vector<L>{L::Mvpa});
  CHECK(segment_starts(std::vector<double>{}, 30.0).empty());
  CHECK(segment_starts(std::vector<double>{0, 30, 60.4, 90.9}, 30.0) ==
        std::vector<std::size_t>{0, 3});
}

TEST_CASE("parameter validation") {
  HmmParams h = sticky(0.9, 0.8);
  CHECK_NOTHROW(validate(h));
  h.transition[1][1] += 0.1;
  CHECK_THROWS_AS(validate(h), InputError);
  LabeledSequence s = sequence_of({L::Sleep, L::Sleep});
  s.times[1] = s.times[0];
  CHECK_THROWS_AS(validate(s), InputError);
}

TEST_CASE("hmm save/load round trip") {
  testing::TempDir dir("hmm");
  std::mt19937_64 rng(10);
  const HmmParams h = random_params(rng);
  save_hmm(dir / "hmm.txt", h);
  const HmmParams back = load_hmm(dir / "hmm.txt");
  CHECK(back.prior == h.prior);
  CHECK(back.transition == h.transition);
  CHECK(back.emission == h.emission);
  std::ofstream(dir / "bad.txt") << "garbage\n";
  CHECK_THROWS_AS(load_hmm(dir / "bad.txt"), Error);
}
