#include "wristhar/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "wristhar/csv.hpp"
#include "wristhar/errors.hpp"

namespace wristhar {

namespace {

void check_distribution(std::span<const double> p, double tolerance, const std::string& what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError(what + " has an invalid entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > tolerance) throw InputError(what + " does not sum to 1");
}

ClassProbs normalize_counts(const ClassProbs& counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  ClassProbs out{};
  for (std::size_t i = 0; i < kNumLabels; ++i) out[i] = counts[i] / total;
  return out;
}

ClassProbs identity_row(std::size_t i) {
  ClassProbs row{};
  row[i] = 1.0;
  return row;
}

}  // namespace

void validate(const HmmParams& params, double tolerance) {
  check_distribution(params.prior, tolerance, "prior");
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    check_distribution(params.transition[i], tolerance, "transition row " + std::to_string(i));
    check_distribution(params.emission[i], tolerance, "emission row " + std::to_string(i));
  }
}

void validate(const LabeledSequence& sequence) {
  const std::size_t n = sequence.times.size();
  if (sequence.pred_labels.size() != n) throw InputError("pred_labels length mismatch");
  if (sequence.true_labels && sequence.true_labels->size() != n) {
    throw InputError("true_labels length mismatch");
  }
  if (sequence.pred_probs && sequence.pred_probs->size() != n) {
    throw InputError("pred_probs length mismatch");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(sequence.times[i] > sequence.times[i - 1])) {
      throw InputError("sequence times are not strictly increasing");
    }
  }
}

ClassProbs apply_floor(const ClassProbs& p, double eps) {
  ClassProbs out{};
  const double scale = 1.0 - static_cast<double>(kNumLabels) * eps;
  for (std::size_t i = 0; i < kNumLabels; ++i) out[i] = eps + scale * p[i];
  return out;
}

ClassProbs train_prior(std::span<const IntensityLabel> labels, double eps) {
  if (labels.empty()) throw InputError("prior training needs at least one label");
  ClassProbs counts{};
  for (IntensityLabel l : labels) counts[index_of(l)] += 1.0;
  return apply_floor(normalize_counts(counts), eps);
}

Matrix4 count_transitions(std::span<const LabeledSequence> sequences,
                          const HmmTrainingOptions& options) {
  Matrix4 counts{};
  for (const LabeledSequence& seq : sequences) {
    if (!seq.true_labels) throw InputError("transition training needs true labels");
    const auto& truth = *seq.true_labels;
    if (truth.size() != seq.times.size()) throw InputError("true_labels length mismatch");
    for (std::size_t t = 0; t + 1 < truth.size(); ++t) {
      if (!truth[t] || !truth[t + 1]) continue;
      const double gap = seq.times[t + 1] - seq.times[t];
      if (std::abs(gap - options.expected_gap_s) > options.gap_tolerance_s) continue;
      counts[index_of(*truth[t])][index_of(*truth[t + 1])] += 1.0;
    }
  }
  return counts;
}

Matrix4 train_transition(std::span<const LabeledSequence> sequences,
                         const HmmTrainingOptions& options) {
  Matrix4 counts = count_transitions(sequences, options);
  double observed = 0.0;
  for (const auto& row : counts) observed += std::accumulate(row.begin(), row.end(), 0.0);
  if (observed == 0.0) {
    throw DegenerateTrainingError("no transition in the training data meets the expected gap");
  }
  const auto sleep = index_of(IntensityLabel::Sleep);
  const auto sedentary = index_of(IntensityLabel::Sedentary);
  std::set<std::string> participants;
  for (const LabeledSequence& seq : sequences) participants.insert(seq.participant_id);
  counts[sleep][sedentary] += static_cast<double>(participants.size());
  counts[sedentary][sleep] += static_cast<double>(participants.size());
  Matrix4 out{};
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    const double total = std::accumulate(counts[i].begin(), counts[i].end(), 0.0);
    out[i] = apply_floor(total > 0.0 ? normalize_counts(counts[i]) : identity_row(i),
                         options.smoothing_floor);
  }
  return out;
}

Matrix4 train_emission(std::span<const IntensityLabel> true_labels,
                       std::span<const ClassProbs> pred_probs, double eps) {
  if (true_labels.size() != pred_probs.size()) {
    throw InputError("emission training needs equal-length labels and probabilities");
  }
  Matrix4 sums{};
  std::array<double, kNumLabels> rows{};
  for (std::size_t n = 0; n < true_labels.size(); ++n) {
    const ClassProbs& p = pred_probs[n];
    double total = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw InputError("negative probability in emission training");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-6) {
      throw InputError("probability row " + std::to_string(n) + " does not sum to 1");
    }
    const auto i = index_of(true_labels[n]);
    for (std::size_t j = 0; j < kNumLabels; ++j) sums[i][j] += p[j];
    rows[i] += 1.0;
  }
  if (std::all_of(rows.begin(), rows.end(), [](double r) { return r == 0.0; })) {
    throw DegenerateTrainingError("emission training has no rows");
  }
  Matrix4 out{};
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    out[i] = apply_floor(rows[i] > 0.0 ? normalize_counts(sums[i]) : identity_row(i), eps);
  }
  return out;
}

std::vector<IntensityLabel> viterbi(std::span<const IntensityLabel> observations,
                                    const HmmParams& params) {
  constexpr std::size_t S = kNumLabels;
  const std::size_t n = observations.size();
  if (n == 0) return {};
  const auto safe_log = [](double p) {
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  };
  // Log scores of equally likely paths can differ in the last bits depending
  // on summation order; those count as ties so the lower index wins.
  const auto beats = [](double a, double b) {
    if (std::isinf(b)) return a > b;
    return a - b > 1e-12 * std::max(1.0, std::abs(b));
  };
  Matrix4 log_a{}, log_e{};
  ClassProbs log_pi{};
  for (std::size_t i = 0; i < S; ++i) {
    log_pi[i] = safe_log(params.prior[i]);
    for (std::size_t j = 0; j < S; ++j) {
      log_a[i][j] = safe_log(params.transition[i][j]);
      log_e[i][j] = safe_log(params.emission[i][j]);
    }
  }

  std::vector<std::array<std::uint8_t, S>> back(n);
  ClassProbs delta{};
  for (std::size_t s = 0; s < S; ++s) delta[s] = log_pi[s] + log_e[s][index_of(observations[0])];
  for (std::size_t t = 1; t < n; ++t) {
    ClassProbs next{};
    const std::size_t o = index_of(observations[t]);
    for (std::size_t j = 0; j < S; ++j) {
      std::size_t best = 0;
      double best_score = delta[0] + log_a[0][j];
      for (std::size_t i = 1; i < S; ++i) {
        const double score = delta[i] + log_a[i][j];
        if (beats(score, best_score)) {
          best_score = score;
          best = i;
        }
      }
      next[j] = best_score + log_e[j][o];
      back[t][j] = static_cast<std::uint8_t>(best);
    }
    delta = next;
  }
  std::size_t state = 0;
  for (std::size_t s = 1; s < S; ++s) {
    if (beats(delta[s], delta[state])) state = s;
  }
  std::vector<IntensityLabel> path(n);
  for (std::size_t t = n; t-- > 0;) {
    path[t] = label_from_index(state);
    if (t > 0) state = back[t][state];
  }
  return path;
}

double path_log_probability(std::span<const IntensityLabel> states,
                            std::span<const IntensityLabel> observations,
                            const HmmParams& params) {
  if (states.size() != observations.size()) throw InputError("path and observations differ in length");
  if (states.empty()) return 0.0;
  double lp = std::log(params.prior[index_of(states[0])]) +
              std::log(params.emission[index_of(states[0])][index_of(observations[0])]);
  for (std::size_t t = 1; t < states.size(); ++t) {
    lp += std::log(params.transition[index_of(states[t - 1])][index_of(states[t])]);
    lp += std::log(params.emission[index_of(states[t])][index_of(observations[t])]);
  }
  return lp;
}

std::vector<std::size_t> segment_starts(std::span<const double> times, double expected_gap_s,
                                        double tolerance_s) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i == 0 || std::abs(times[i] - times[i - 1] - expected_gap_s) > tolerance_s) {
      starts.push_back(i);
    }
  }
  return starts;
}

LabeledSequence smooth_sequence(const LabeledSequence& sequence, const HmmParams& params,
                                double expected_gap_s, double tolerance_s) {
  validate(sequence);
  LabeledSequence out = sequence;
  auto starts = segment_starts(sequence.times, expected_gap_s, tolerance_s);
  starts.push_back(sequence.times.size());
  for (std::size_t s = 0; s + 1 < starts.size(); ++s) {
    const std::span<const IntensityLabel> obs(sequence.pred_labels.data() + starts[s],
                                              starts[s + 1] - starts[s]);
    const auto path = viterbi(obs, params);
    std::copy(path.begin(), path.end(), out.pred_labels.begin() + static_cast<std::ptrdiff_t>(starts[s]));
  }
  return out;
}

namespace {
constexpr std::string_view kHmmMagic = "wristhar-hmm 1";
}

void save_hmm(const std::filesystem::path& path, const HmmParams& params) {
  std::ostringstream out;
  out.precision(17);
  out << kHmmMagic << "\n# prior\n";
  for (std::size_t i = 0; i < kNumLabels; ++i) out << (i ? " " : "") << params.prior[i];
  out << "\n# transition\n";
  for (const auto& row : params.transition) {
    for (std::size_t j = 0; j < kNumLabels; ++j) out << (j ? " " : "") << row[j];
    out << "\n";
  }
  out << "# emission\n";
  for (const auto& row : params.emission) {
    for (std::size_t j = 0; j < kNumLabels; ++j) out << (j ? " " : "") << row[j];
    out << "\n";
  }
  csv::write_file(path, out.str());
}

HmmParams load_hmm(const std::filesystem::path& path) {
  std::istringstream in(csv::read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != kHmmMagic) {
    throw ParseError(path.string() + " is not an HMM parameter file");
  }
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream row(line);
    std::string token;
    while (row >> token) values.push_back(csv::parse_double(token, "hmm parameter"));
  }
  if (values.size() != kNumLabels * (1 + 2 * kNumLabels)) {
    throw ParseError(path.string() + ": expected 36 HMM parameters");
  }
  HmmParams params;
  std::size_t k = 0;
  for (double& p : params.prior) p = values[k++];
  for (auto& row : params.transition) for (double& p : row) p = values[k++];
  for (auto& row : params.emission) for (double& p : row) p = values[k++];
  validate(params, 1e-9);
  return params;
}

}  // namespace wristhar
