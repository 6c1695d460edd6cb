#include "wristhar/agreement.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "wristhar/errors.hpp"

namespace wristhar {

Composition composition(std::string participant_id, std::span<const IntensityLabel> labels,
                        double window_duration_s) {
  Composition c;
  c.participant_id = std::move(participant_id);
  std::array<std::size_t, kNumLabels> counts{};
  for (IntensityLabel l : labels) ++counts[index_of(l)];
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    c.hours[k] = static_cast<double>(counts[k]) * window_duration_s / 3600.0;
  }
  c.windows = labels.size();
  return c;
}

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 && sbb == 0.0) return 1.0;
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InputError("incomplete beta needs positive a and b");
  if (!(x >= 0.0 && x <= 1.0)) throw InputError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

namespace {

// P(|T| > |t|).
double two_sided_tail(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return regularized_incomplete_beta(dof / 2.0, 0.5, x);
}

}  // namespace

double students_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw InputError("t distribution needs positive degrees of freedom");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  const double half_tail = 0.5 * two_sided_tail(t, dof);
  return t > 0.0 ? 1.0 - half_tail : half_tail;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw PairingError("paired t-test inputs differ in length");
  if (a.size() < 2) throw InsufficientDataError("paired t-test needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
  const double mean = mean_of(d);
  const double sd = sample_sd(d, mean);
  TTestResult r;
  r.dof = static_cast<double>(d.size() - 1);
  if (sd == 0.0) {
    r.t_statistic = mean == 0.0 ? 0.0
                                : std::copysign(std::numeric_limits<double>::infinity(), mean);
    r.p_value = mean == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(d.size())));
  r.p_value = two_sided_tail(r.t_statistic, r.dof);
  return r;
}

AgreementReport composition_agreement(std::span<const Composition> a,
                                      std::span<const Composition> b) {
  if (a.size() != b.size()) {
    throw PairingError("composition lists cover different numbers of participants");
  }
  std::map<std::string, const Composition*> by_pid;
  for (const Composition& c : b) {
    if (!by_pid.emplace(c.participant_id, &c).second) {
      throw PairingError("duplicate participant '" + c.participant_id + "'");
    }
  }
  if (a.size() < 2) throw InsufficientDataError("agreement needs at least two participants");

  AgreementReport report;
  std::array<std::vector<double>, kNumLabels> va, vb;
  for (const Composition& ca : a) {
    const auto it = by_pid.find(ca.participant_id);
    if (it == by_pid.end()) {
      throw PairingError("participant '" + ca.participant_id + "' has no paired composition");
    }
    report.participants.push_back(ca.participant_id);
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      va[k].push_back(ca.hours[k]);
      vb[k].push_back(it->second->hours[k]);
    }
  }
  if (report.participants.size() != by_pid.size()) {
    throw PairingError("duplicate participant in reference compositions");
  }

  const std::size_t n = a.size();
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    LabelAgreement& g = report.per_label[k];
    g.n = n;
    std::vector<double> d(n), abs_d(n);
    double ape_sum = 0.0;
    std::size_t ape_n = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = vb[k][i] - va[k][i];
      abs_d[i] = std::abs(d[i]);
      if (va[k][i] > 0.0) {
        ape_sum += abs_d[i] / va[k][i] * 100.0;
        ++ape_n;
      } else {
        ++g.mape_excluded;
      }
    }
    g.mean_difference = mean_of(d);
    g.sd_difference = sample_sd(d, g.mean_difference);
    g.loa_lower = g.mean_difference - 1.96 * g.sd_difference;
    g.loa_upper = g.mean_difference + 1.96 * g.sd_difference;
    g.pearson_r = pearson(va[k], vb[k]);
    g.mae = mean_of(abs_d);
    g.mae_sd = sample_sd(abs_d, g.mae);
    if (ape_n > 0) g.mape = ape_sum / static_cast<double>(ape_n);
    const TTestResult t = paired_t_test(va[k], vb[k]);
    g.t_statistic = t.t_statistic;
    g.p_value = t.p_value;
  }
  return report;
}

}  // namespace wristhar
