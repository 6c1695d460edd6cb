#include "wristhar/external.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "wristhar/csv.hpp"
#include "wristhar/errors.hpp"

namespace wristhar {

std::vector<ExternalPredictions> parse_external_predictions(std::string_view content,
                                                            std::string_view source_tag,
                                                            TimeFormat format) {
  csv::Cursor cursor(content);
  std::vector<std::string> f;
  if (!cursor.next(f)) throw EmptyInputError("external predictions file is empty");
  static constexpr std::array<std::string_view, 6> kColumns = {
      "pid", "time", "p_sleep", "p_sedentary", "p_light", "p_mvpa"};
  std::array<std::size_t, 6> cols{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    cols[c] = csv::find_column(f, kColumns[c]);
    if (cols[c] == std::string_view::npos) {
      throw SchemaError("external predictions missing column '" + std::string(kColumns[c]) + "'");
    }
  }
  const std::size_t needed = *std::max_element(cols.begin(), cols.end()) + 1;

  std::vector<ExternalPredictions> out;
  std::map<std::string, std::size_t> by_pid;
  while (cursor.next(f)) {
    const std::string line = "line " + std::to_string(cursor.line_number());
    if (f.size() < needed) throw SchemaError("external predictions " + line + " is short");
    ClassProbs p{};
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      p[c] = csv::parse_double(f[cols[2 + c]], kColumns[2 + c]);
      if (!(p[c] >= 0.0) || !std::isfinite(p[c])) {
        throw ValidationError("external predictions " + line + ": invalid probability " +
                              f[cols[2 + c]]);
      }
    }
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    if (std::abs(sum - 1.0) > kExternalRowSumTolerance) {
      throw ValidationError("external predictions " + line + ": probabilities sum to " +
                            csv::format_double(sum));
    }
    if (sum != 1.0) {
      for (double& v : p) v /= sum;
    }
    const std::string& pid = f[cols[0]];
    auto [it, inserted] = by_pid.emplace(pid, out.size());
    if (inserted) out.push_back({pid, {}, {}, std::string(source_tag)});
    ExternalPredictions& target = out[it->second];
    const double t = parse_timestamp(f[cols[1]], format);
    if (!target.times.empty() && !(t > target.times.back())) {
      throw OrderingError("external predictions " + line + ": times not increasing for '" + pid +
                          "'");
    }
    target.times.push_back(t);
    target.probs.push_back(p);
  }
  return out;
}

std::vector<ExternalPredictions> load_external_predictions(const std::filesystem::path& path,
                                                           TimeFormat format) {
  return parse_external_predictions(csv::read_file(path), path.stem().string(), format);
}

void write_external_predictions(const std::filesystem::path& path,
                                std::span<const ExternalPredictions> predictions) {
  std::string out = "pid,time,p_sleep,p_sedentary,p_light,p_mvpa\n";
  for (const ExternalPredictions& preds : predictions) {
    for (std::size_t i = 0; i < preds.times.size(); ++i) {
      out += csv::escape(preds.participant_id) + "," + format_epoch_millis(preds.times[i]);
      for (double v : preds.probs[i]) out += "," + csv::format_double(v);
      out += "\n";
    }
  }
  csv::write_file(path, out);
}

LabeledSequence align_predictions(const ExternalPredictions& predictions,
                                  std::span<const WindowRef> windows, double tolerance_s) {
  LabeledSequence seq;
  seq.participant_id = predictions.participant_id;
  seq.true_labels.emplace();
  seq.pred_probs.emplace();
  const auto& times = predictions.times;
  for (const WindowRef& w : windows) {
    if (w.participant_id != predictions.participant_id) continue;
    const auto it = std::lower_bound(times.begin(), times.end(), w.start_time - tolerance_s);
    std::size_t best = times.size();
    double best_dist = tolerance_s;
    for (auto j = it; j != times.end() && *j <= w.start_time + tolerance_s; ++j) {
      const double dist = std::abs(*j - w.start_time);
      if (dist <= best_dist) {
        if (best == times.size() || dist < best_dist) best = static_cast<std::size_t>(j - times.begin());
        best_dist = dist;
      }
    }
    if (best == times.size()) continue;
    if (!seq.times.empty() && !(w.start_time > seq.times.back())) {
      throw InputError("windows must be in increasing time order for alignment");
    }
    seq.times.push_back(w.start_time);
    seq.true_labels->push_back(w.label);
    seq.pred_probs->push_back(predictions.probs[best]);
    seq.pred_labels.push_back(argmax_label(predictions.probs[best]));
  }
  if (seq.times.empty()) {
    throw AlignmentError("no window of '" + predictions.participant_id +
                         "' matches an external prediction");
  }
  return seq;
}

}  // namespace wristhar
