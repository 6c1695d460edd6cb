#include "wristhar/cv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "wristhar/errors.hpp"

namespace wristhar {

std::size_t ParticipantLabelCounts::total() const {
  std::size_t t = 0;
  for (std::size_t c : counts) t += c;
  return t;
}

std::vector<std::string> FoldAssignment::test_participants(int fold) const {
  std::vector<std::string> out;
  for (const auto& [pid, f] : fold_of) {
    if (f == fold) out.push_back(pid);
  }
  return out;
}

std::vector<std::string> FoldAssignment::training_participants(int fold) const {
  std::vector<std::string> out;
  for (const auto& [pid, f] : fold_of) {
    if (f != fold) out.push_back(pid);
  }
  return out;
}

namespace {

using Counts = std::array<double, kNumLabels>;

double deviation(const Counts& counts, const Counts& global) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total == 0.0) return 0.0;
  double dev = 0.0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const double diff = counts[c] / total - global[c];
    dev += diff * diff;
  }
  return dev;
}

}  // namespace

FoldAssignment stratified_group_kfold(std::span<const ParticipantLabelCounts> participants,
                                      int k, std::uint64_t seed, double inner_fraction) {
  if (k < 2) throw InputError("k must be at least 2");
  if (participants.size() < static_cast<std::size_t>(k)) {
    throw InputError("stratified group k-fold needs at least k participants (" +
                     std::to_string(participants.size()) + " < " + std::to_string(k) + ")");
  }
  if (!(inner_fraction >= 0.0 && inner_fraction < 1.0)) {
    throw InputError("inner validation fraction must be in [0, 1)");
  }
  std::set<std::string> seen;
  for (const auto& p : participants) {
    if (!seen.insert(p.participant_id).second) {
      throw InputError("duplicate participant '" + p.participant_id + "'");
    }
  }

  // Canonical order first so the result does not depend on input order.
  std::vector<const ParticipantLabelCounts*> order;
  for (const auto& p : participants) order.push_back(&p);
  std::sort(order.begin(), order.end(), [](const auto* l, const auto* r) {
    return l->participant_id < r->participant_id;
  });
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* l, const auto* r) { return l->total() > r->total(); });

  Counts global{};
  double grand = 0.0;
  for (const auto* p : order) {
    for (std::size_t c = 0; c < kNumLabels; ++c) global[c] += static_cast<double>(p->counts[c]);
  }
  for (double g : global) grand += g;
  if (grand > 0.0) {
    for (double& g : global) g /= grand;
  }

  FoldAssignment out;
  out.k = k;
  out.seed = seed;
  std::vector<Counts> fold_counts(static_cast<std::size_t>(k), Counts{});
  std::vector<std::size_t> fold_sizes(static_cast<std::size_t>(k), 0);
  for (const auto* p : order) {
    const std::size_t min_size = *std::min_element(fold_sizes.begin(), fold_sizes.end());
    int best = -1;
    double best_delta = std::numeric_limits<double>::infinity();
    for (int f = 0; f < k; ++f) {
      const auto fi = static_cast<std::size_t>(f);
      if (fold_sizes[fi] != min_size) continue;
      Counts with = fold_counts[fi];
      for (std::size_t c = 0; c < kNumLabels; ++c) with[c] += static_cast<double>(p->counts[c]);
      const double delta = deviation(with, global) - deviation(fold_counts[fi], global);
      if (delta < best_delta) {
        best_delta = delta;
        best = f;
      }
    }
    const auto bi = static_cast<std::size_t>(best);
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      fold_counts[bi][c] += static_cast<double>(p->counts[c]);
    }
    ++fold_sizes[bi];
    out.fold_of[p->participant_id] = best;
  }

  for (int f = 0; f < k; ++f) {
    std::vector<std::string> train = out.training_participants(f);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(f)};
    std::mt19937_64 fold_rng(seq);
    std::shuffle(train.begin(), train.end(), fold_rng);
    std::size_t n_inner = 0;
    if (inner_fraction > 0.0 && train.size() >= 2) {
      n_inner = static_cast<std::size_t>(
          std::llround(inner_fraction * static_cast<double>(train.size())));
      n_inner = std::clamp<std::size_t>(n_inner, 1, train.size() - 1);
    }
    train.resize(n_inner);
    std::sort(train.begin(), train.end());
    out.inner_validation.push_back(std::move(train));
  }
  return out;
}

}  // namespace wristhar
