#include "wristhar/metrics.hpp"

#include <cmath>
#include <numeric>

#include "wristhar/errors.hpp"

namespace wristhar {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::uint64_t{0});
  return t;
}

std::uint64_t ConfusionMatrix::row_total(std::size_t i) const {
  return std::accumulate(counts[i].begin(), counts[i].end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::column_total(std::size_t j) const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += row[j];
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    for (std::size_t j = 0; j < kNumLabels; ++j) counts[i][j] += other.counts[i][j];
  }
  return *this;
}

ConfusionMatrix confusion_matrix(std::span<const IntensityLabel> truth,
                                 std::span<const IntensityLabel> predicted) {
  if (truth.size() != predicted.size()) throw InputError("truth and predictions differ in length");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

namespace {

double checked_total(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw InputError("confusion matrix is empty");
  return static_cast<double>(total);
}

}  // namespace

double accuracy(const ConfusionMatrix& cm) {
  const double total = checked_total(cm);
  double trace = 0.0;
  for (std::size_t i = 0; i < kNumLabels; ++i) trace += static_cast<double>(cm.counts[i][i]);
  return trace / total;
}

double balanced_accuracy(const ConfusionMatrix& cm) {
  checked_total(cm);
  double sum = 0.0;
  int present = 0;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    const auto row = cm.row_total(i);
    if (row == 0) continue;
    sum += static_cast<double>(cm.counts[i][i]) / static_cast<double>(row);
    ++present;
  }
  return sum / present;
}

double macro_f1(const ConfusionMatrix& cm) {
  checked_total(cm);
  double sum = 0.0;
  int present = 0;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    const auto row = cm.row_total(i);
    const auto col = cm.column_total(i);
    if (row == 0 && col == 0) continue;
    ++present;
    const auto tp = static_cast<double>(cm.counts[i][i]);
    // F1 = 2TP / (2TP + FP + FN) = 2TP / (row + col); zero when TP is zero.
    sum += tp > 0.0 ? 2.0 * tp / static_cast<double>(row + col) : 0.0;
  }
  return sum / present;
}

double cohen_kappa(const ConfusionMatrix& cm) {
  const double total = checked_total(cm);
  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    observed += static_cast<double>(cm.counts[i][i]);
    expected += static_cast<double>(cm.row_total(i)) * static_cast<double>(cm.column_total(i));
  }
  observed /= total;
  expected /= total * total;
  if (expected >= 1.0) return observed >= 1.0 ? 1.0 : 0.0;
  return (observed - expected) / (1.0 - expected);
}

MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  s.values = std::move(values);
  if (s.values.empty()) return s;
  const auto n = static_cast<double>(s.values.size());
  s.mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / n;
  if (s.values.size() > 1) {
    double ss = 0.0;
    for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

ParticipantMetrics participant_metrics(std::string participant_id, const ConfusionMatrix& cm) {
  ParticipantMetrics m;
  m.participant_id = std::move(participant_id);
  m.confusion = cm;
  m.accuracy = accuracy(cm);
  m.balanced_accuracy = balanced_accuracy(cm);
  m.cohen_kappa = cohen_kappa(cm);
  m.macro_f1 = macro_f1(cm);
  return m;
}

MetricsReport aggregate_metrics(std::vector<ParticipantMetrics> participants) {
  MetricsReport report;
  std::vector<double> acc, bal, kappa, f1;
  for (const auto& p : participants) {
    acc.push_back(p.accuracy);
    bal.push_back(p.balanced_accuracy);
    kappa.push_back(p.cohen_kappa);
    f1.push_back(p.macro_f1);
    report.pooled += p.confusion;
  }
  report.accuracy = summarize(std::move(acc));
  report.balanced_accuracy = summarize(std::move(bal));
  report.cohen_kappa = summarize(std::move(kappa));
  report.macro_f1 = summarize(std::move(f1));
  if (report.pooled.total() > 0) {
    report.pooled_accuracy = accuracy(report.pooled);
    report.pooled_balanced_accuracy = balanced_accuracy(report.pooled);
    report.pooled_cohen_kappa = cohen_kappa(report.pooled);
    report.pooled_macro_f1 = macro_f1(report.pooled);
  }
  report.participants = std::move(participants);
  return report;
}

MetricsReport per_participant_metrics(std::span<const ParticipantLabels> participants) {
  std::vector<ParticipantMetrics> rows;
  for (const auto& p : participants) {
    if (p.truth.empty()) {
      throw InputError("participant '" + p.participant_id + "' has no evaluated windows");
    }
    rows.push_back(participant_metrics(p.participant_id, confusion_matrix(p.truth, p.predicted)));
  }
  return aggregate_metrics(std::move(rows));
}

}  // namespace wristhar
