#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wristhar/labels.hpp"

namespace wristhar {

struct ParticipantLabelCounts {
  std::string participant_id;
  std::array<std::size_t, kNumLabels> counts{};

  std::size_t total() const;
};

struct FoldAssignment {
  int k = 0;
  std::uint64_t seed = 0;
  std::map<std::string, int> fold_of;
  /// Per fold: training participants held out as the inner validation set.
  std::vector<std::vector<std::string>> inner_validation;

  /// Participant ids (sorted) whose test fold is `fold`.
  std::vector<std::string> test_participants(int fold) const;
  /// All other participant ids (sorted).
  std::vector<std::string> training_participants(int fold) const;
};

/// Greedy stratified group k-fold. Participants are shuffled by `seed` and
/// stable-sorted by descending window count, then placed one at a time into
/// the least populated fold (so fold sizes differ by at most one) whose
/// label proportions move least away from the global proportions, measured
/// as the increase in squared deviation. Remaining ties go to the lowest fold
/// index. Each fold also gets an inner validation set of round(20%) of its
/// training participants (at least one), drawn with the same seed.
///
/// Throws InputError when there are fewer than k participants, k < 2, or a
/// participant id repeats.
FoldAssignment stratified_group_kfold(std::span<const ParticipantLabelCounts> participants,
                                      int k = 5, std::uint64_t seed = 0,
                                      double inner_fraction = 0.2);

}  // namespace wristhar
