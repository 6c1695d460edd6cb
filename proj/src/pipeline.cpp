#include "wristhar/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "wristhar/csv.hpp"
#include "wristhar/errors.hpp"

namespace wristhar {

PreprocessResult preprocess_recording(const Recording& raw, const LabelMapping* mapping,
                                      const PreprocessOptions& options) {
  validate(raw);
  PreprocessResult result;
  Recording rec = (mapping != nullptr && raw.has_annotations()) ? map_annotations(raw, *mapping)
                                                                : raw;
  if (std::abs(rec.sample_rate_hz - options.target_rate_hz) > 1e-9 * options.target_rate_hz) {
    rec = resample(rec, options.target_rate_hz);
  }
  rec = lowpass(rec, options.filter);
  result.nonwear = detect_nonwear(rec, options.nonwear);
  rec = remove_nonwear(rec, result.nonwear);
  if (options.calibrate) {
    auto [calibrated, report] = autocalibrate(rec, options.calibration);
    rec = std::move(calibrated);
    result.calibration = std::move(report);
  } else {
    result.calibration.reason = "disabled";
  }
  result.windows = make_windows(rec, options.windows);
  result.recording = std::move(rec);
  return result;
}

namespace {

HmmTrainingOptions hmm_options(const PipelineOptions& options) {
  HmmTrainingOptions h = options.hmm;
  h.expected_gap_s = options.window_duration_s;
  return h;
}

std::vector<std::string> feature_name_list() {
  const auto& names = feature_names();
  return {names.begin(), names.end()};
}

}  // namespace

TrainedModel train_model(std::span<const ParticipantData> participants,
                         const PipelineOptions& options) {
  FeatureMatrix x(0, kFeatureCount);
  std::vector<IntensityLabel> y;
  std::vector<LabeledSequence> sequences;
  for (const ParticipantData& p : participants) {
    LabeledSequence seq;
    seq.participant_id = p.participant_id;
    seq.true_labels.emplace();
    for (const FeatureRow& row : p.rows) {
      seq.times.push_back(row.start_time);
      seq.true_labels->push_back(row.label);
      seq.pred_labels.push_back(IntensityLabel::Sleep);  // placeholder, unused
      if (!row.label) continue;
      x.append_row(row.values);
      y.push_back(*row.label);
    }
    sequences.push_back(std::move(seq));
  }
  if (y.empty()) throw DegenerateTrainingError("no labelled windows to train on");

  TrainedModel model;
  model.forest = train_forest(x, y, options.forest, feature_name_list(),
                              std::string(kFeatureManifestVersion));
  const HmmTrainingOptions h = hmm_options(options);
  model.hmm.prior = train_prior(y, h.smoothing_floor);
  model.hmm.transition = train_transition(sequences, h);

  std::vector<IntensityLabel> oob_truth;
  std::vector<ClassProbs> oob_probs;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (model.forest.oob_valid.empty() || !model.forest.oob_valid[i]) continue;
    oob_truth.push_back(y[i]);
    oob_probs.push_back(model.forest.oob[i]);
  }
  if (oob_truth.empty()) {
    throw DegenerateTrainingError("forest produced no out-of-bag estimates for the emission matrix");
  }
  model.hmm.emission = train_emission(oob_truth, oob_probs, h.smoothing_floor);
  return model;
}

LabeledSequence predict_raw(const ForestModel& forest, const ParticipantData& participant,
                            int jobs) {
  if (forest.feature_manifest_version != kFeatureManifestVersion ||
      forest.n_features() != kFeatureCount) {
    throw CompatibilityError("model feature manifest '" + forest.feature_manifest_version +
                             "' does not match '" + std::string(kFeatureManifestVersion) + "'");
  }
  const auto& names = feature_names();
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    if (forest.feature_names[j] != names[j]) {
      throw CompatibilityError("model feature " + std::to_string(j) + " is '" +
                               forest.feature_names[j] + "', expected '" + std::string(names[j]) +
                               "'");
    }
  }
  FeatureMatrix x(0, kFeatureCount);
  LabeledSequence seq;
  seq.participant_id = participant.participant_id;
  seq.true_labels.emplace();
  for (const FeatureRow& row : participant.rows) {
    x.append_row(row.values);
    seq.times.push_back(row.start_time);
    seq.true_labels->push_back(row.label);
  }
  seq.pred_probs = predict_proba(forest, x, jobs);
  for (const ClassProbs& p : *seq.pred_probs) seq.pred_labels.push_back(argmax_label(p));
  validate(seq);
  return seq;
}

LabeledSequence postprocess_sequence(const LabeledSequence& raw, const HmmParams& hmm,
                                     const PipelineOptions& options) {
  LabeledSequence out = raw;
  if (options.use_hmm) {
    out = smooth_sequence(out, hmm, options.window_duration_s, options.hmm.gap_tolerance_s);
  }
  if (options.sleep_correction) {
    out = sleep_block_correction(out, options.window_duration_s, options.min_sleep_block_s,
                                 options.hmm.gap_tolerance_s);
  }
  return out;
}

Grouping parse_grouping(std::string_view text) {
  if (text == "age_band") return Grouping::AgeBand;
  if (text == "sex") return Grouping::Sex;
  throw ConfigurationError("unknown subgroup '" + std::string(text) +
                           "' (expected age_band or sex)");
}

std::string_view grouping_name(Grouping grouping) {
  return grouping == Grouping::AgeBand ? "age_band" : "sex";
}

std::vector<SubgroupReport> subgroup_report(const MetricsReport& metrics,
                                            std::span<const Composition> truth,
                                            std::span<const Composition> predicted,
                                            std::span<const SubjectMeta> meta, Grouping grouping) {
  std::map<std::string, const SubjectMeta*> meta_of;
  for (const SubjectMeta& m : meta) meta_of[m.participant_id] = &m;
  std::map<std::string, const Composition*> truth_of, pred_of;
  for (const Composition& c : truth) truth_of[c.participant_id] = &c;
  for (const Composition& c : predicted) pred_of[c.participant_id] = &c;

  // Ordered by the enum value of the group.
  std::map<int, SubgroupReport> parts;
  std::map<int, std::vector<ParticipantMetrics>> rows;
  for (const ParticipantMetrics& pm : metrics.participants) {
    const auto it = meta_of.find(pm.participant_id);
    if (it == meta_of.end()) {
      throw MetadataError("participant '" + pm.participant_id + "' has no metadata");
    }
    const int key = grouping == Grouping::AgeBand ? static_cast<int>(it->second->age_band)
                                                  : static_cast<int>(it->second->sex);
    SubgroupReport& part = parts[key];
    part.grouping = grouping;
    part.group = std::string(grouping == Grouping::AgeBand ? age_band_name(it->second->age_band)
                                                           : sex_name(it->second->sex));
    part.participants.push_back(pm.participant_id);
    rows[key].push_back(pm);
  }

  std::vector<SubgroupReport> out;
  for (auto& [key, part] : parts) {
    part.metrics = aggregate_metrics(std::move(rows[key]));
    std::vector<Composition> a, b;
    for (const std::string& pid : part.participants) {
      const auto ta = truth_of.find(pid);
      const auto pb = pred_of.find(pid);
      if (ta != truth_of.end() && pb != pred_of.end()) {
        a.push_back(*ta->second);
        b.push_back(*pb->second);
      }
    }
    if (a.size() >= 2 && a.size() == part.participants.size()) {
      part.agreement = composition_agreement(a, b);
    }
    out.push_back(std::move(part));
  }
  return out;
}

CvReport run_pipeline_cv(std::span<const ParticipantData> participants,
                         const PipelineOptions& options, const CvOptions& cv) {
  std::map<std::string, const ParticipantData*> by_pid;
  std::vector<ParticipantLabelCounts> counts;
  for (const ParticipantData& p : participants) {
    ParticipantLabelCounts c;
    c.participant_id = p.participant_id;
    for (const FeatureRow& row : p.rows) {
      if (row.label) ++c.counts[index_of(*row.label)];
    }
    if (c.total() == 0) continue;
    if (!by_pid.emplace(p.participant_id, &p).second) {
      throw InputError("duplicate participant '" + p.participant_id + "'");
    }
    counts.push_back(c);
  }

  CvReport report;
  report.window_duration_s = options.window_duration_s;
  report.folds = stratified_group_kfold(counts, cv.k, cv.seed);

  std::map<std::string, LabeledSequence> raw_of, final_of;
  for (int f = 0; f < cv.k; ++f) {
    std::vector<ParticipantData> train;
    const auto train_ids = report.folds.training_participants(f);
    for (const std::string& pid : train_ids) train.push_back(*by_pid.at(pid));
    report.training_participants.push_back(train_ids);

    PipelineOptions fold_options = options;
    fold_options.forest.seed = options.forest.seed + static_cast<std::uint64_t>(f);
    const TrainedModel model = train_model(train, fold_options);
    for (const std::string& pid : report.folds.test_participants(f)) {
      LabeledSequence raw = predict_raw(model.forest, *by_pid.at(pid), options.forest.jobs);
      final_of[pid] = postprocess_sequence(raw, model.hmm, options);
      raw_of[pid] = std::move(raw);
    }
  }

  std::vector<ParticipantMetrics> final_metrics, raw_metrics;
  for (auto& [pid, seq] : final_of) {
    const LabeledSequence& raw = raw_of.at(pid);
    ConfusionMatrix cm_final, cm_raw;
    std::vector<IntensityLabel> truth, pred;
    for (std::size_t i = 0; i < seq.times.size(); ++i) {
      const MaybeLabel& t = (*seq.true_labels)[i];
      if (!t) continue;
      cm_final.add(*t, seq.pred_labels[i]);
      cm_raw.add(*t, raw.pred_labels[i]);
      truth.push_back(*t);
      pred.push_back(seq.pred_labels[i]);
    }
    final_metrics.push_back(participant_metrics(pid, cm_final));
    raw_metrics.push_back(participant_metrics(pid, cm_raw));
    report.truth_compositions.push_back(composition(pid, truth, options.window_duration_s));
    report.predicted_compositions.push_back(composition(pid, pred, options.window_duration_s));
    report.predictions.push_back(std::move(seq));
  }
  report.metrics = aggregate_metrics(std::move(final_metrics));
  report.raw_metrics = aggregate_metrics(std::move(raw_metrics));
  if (report.truth_compositions.size() >= 2) {
    report.agreement =
        composition_agreement(report.truth_compositions, report.predicted_compositions);
  }
  return report;
}

namespace {

using nlohmann::json;

json to_json(const MetricSummary& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"values", s.values}};
}

json to_json(const ConfusionMatrix& cm) {
  json rows = json::array();
  for (const auto& row : cm.counts) rows.push_back(row);
  return rows;
}

json to_json(const MetricsReport& m) {
  json participants = json::array();
  for (const ParticipantMetrics& p : m.participants) {
    participants.push_back({{"participant_id", p.participant_id},
                            {"accuracy", p.accuracy},
                            {"balanced_accuracy", p.balanced_accuracy},
                            {"cohen_kappa", p.cohen_kappa},
                            {"macro_f1", p.macro_f1},
                            {"confusion_matrix", to_json(p.confusion)}});
  }
  return {{"accuracy", to_json(m.accuracy)},
          {"balanced_accuracy", to_json(m.balanced_accuracy)},
          {"cohen_kappa", to_json(m.cohen_kappa)},
          {"macro_f1", to_json(m.macro_f1)},
          {"pooled",
           {{"confusion_matrix", to_json(m.pooled)},
            {"accuracy", m.pooled_accuracy},
            {"balanced_accuracy", m.pooled_balanced_accuracy},
            {"cohen_kappa", m.pooled_cohen_kappa},
            {"macro_f1", m.pooled_macro_f1}}},
          {"participants", participants}};
}

json to_json(const AgreementReport& a) {
  json labels = json::object();
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    const LabelAgreement& g = a.per_label[k];
    labels[std::string(label_name(label_from_index(k)))] = {
        {"n", g.n},
        {"mean_difference", g.mean_difference},
        {"sd_difference", g.sd_difference},
        {"loa_lower", g.loa_lower},
        {"loa_upper", g.loa_upper},
        {"pearson_r", g.pearson_r},
        {"mae", g.mae},
        {"mae_sd", g.mae_sd},
        {"mape", g.mape ? json(*g.mape) : json(nullptr)},
        {"mape_excluded", g.mape_excluded},
        {"t_statistic", std::isfinite(g.t_statistic) ? json(g.t_statistic) : json(nullptr)},
        {"p_value", g.p_value}};
  }
  return {{"participants", a.participants}, {"labels", labels}};
}

json to_json(const Composition& c) {
  json hours = json::object();
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    hours[std::string(label_name(label_from_index(k)))] = c.hours[k];
  }
  return {{"participant_id", c.participant_id}, {"windows", c.windows}, {"hours", hours}};
}

std::string label_header() {
  std::string h;
  for (IntensityLabel l : kAllLabels) h += "," + std::string(label_name(l));
  return h;
}

std::string f(double v) { return csv::format_double(v); }

}  // namespace

void write_report_bundle(const std::filesystem::path& dir, const CvReport& report) {
  std::filesystem::create_directories(dir);

  json folds = json::object();
  folds["k"] = report.folds.k;
  folds["seed"] = report.folds.seed;
  folds["assignment"] = report.folds.fold_of;
  json per_fold = json::array();
  for (int fi = 0; fi < report.folds.k; ++fi) {
    const auto idx = static_cast<std::size_t>(fi);
    per_fold.push_back({{"fold", fi},
                        {"test", report.folds.test_participants(fi)},
                        {"train", idx < report.training_participants.size()
                                      ? json(report.training_participants[idx])
                                      : json::array()},
                        {"inner_validation", report.folds.inner_validation[idx]}});
  }
  folds["folds"] = per_fold;

  json doc;
  doc["window_duration_s"] = report.window_duration_s;
  doc["folds"] = folds;
  doc["metrics"] = to_json(report.metrics);
  doc["raw_metrics"] = to_json(report.raw_metrics);
  json truth = json::array(), pred = json::array();
  for (const Composition& c : report.truth_compositions) truth.push_back(to_json(c));
  for (const Composition& c : report.predicted_compositions) pred.push_back(to_json(c));
  doc["compositions"] = {{"truth", truth}, {"predicted", pred}};
  doc["agreement"] = report.agreement ? to_json(*report.agreement) : json(nullptr);
  json subgroups = json::array();
  for (const SubgroupReport& s : report.subgroups) {
    subgroups.push_back({{"grouping", grouping_name(s.grouping)},
                         {"group", s.group},
                         {"participants", s.participants},
                         {"metrics", to_json(s.metrics)},
                         {"agreement", s.agreement ? to_json(*s.agreement) : json(nullptr)}});
  }
  doc["subgroups"] = subgroups;
  csv::write_file(dir / "report.json", doc.dump(2) + "\n");
  csv::write_file(dir / "folds.json", folds.dump(2) + "\n");

  std::string pm = "pid,fold,windows,accuracy,balanced_accuracy,cohen_kappa,macro_f1,"
                   "raw_accuracy,raw_balanced_accuracy,raw_cohen_kappa,raw_macro_f1\n";
  for (std::size_t i = 0; i < report.metrics.participants.size(); ++i) {
    const ParticipantMetrics& m = report.metrics.participants[i];
    const ParticipantMetrics& r = report.raw_metrics.participants[i];
    pm += csv::escape(m.participant_id) + "," +
          std::to_string(report.folds.fold_of.at(m.participant_id)) + "," +
          std::to_string(m.confusion.total()) + "," + f(m.accuracy) + "," +
          f(m.balanced_accuracy) + "," + f(m.cohen_kappa) + "," + f(m.macro_f1) + "," +
          f(r.accuracy) + "," + f(r.balanced_accuracy) + "," + f(r.cohen_kappa) + "," +
          f(r.macro_f1) + "\n";
  }
  csv::write_file(dir / "per_participant_metrics.csv", pm);

  std::string summary = "stage,metric,mean,sd,pooled\n";
  for (const auto& [stage, m] : {std::pair<std::string, const MetricsReport*>{"final", &report.metrics},
                                 {"raw", &report.raw_metrics}}) {
    summary += stage + ",accuracy," + f(m->accuracy.mean) + "," + f(m->accuracy.sd) + "," +
               f(m->pooled_accuracy) + "\n";
    summary += stage + ",balanced_accuracy," + f(m->balanced_accuracy.mean) + "," +
               f(m->balanced_accuracy.sd) + "," + f(m->pooled_balanced_accuracy) + "\n";
    summary += stage + ",cohen_kappa," + f(m->cohen_kappa.mean) + "," + f(m->cohen_kappa.sd) +
               "," + f(m->pooled_cohen_kappa) + "\n";
    summary += stage + ",macro_f1," + f(m->macro_f1.mean) + "," + f(m->macro_f1.sd) + "," +
               f(m->pooled_macro_f1) + "\n";
  }
  csv::write_file(dir / "metrics_summary.csv", summary);

  std::string cm = "true_label,predicted_label,count,row_proportion\n";
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    const auto row = report.metrics.pooled.row_total(i);
    for (std::size_t j = 0; j < kNumLabels; ++j) {
      const auto c = report.metrics.pooled.counts[i][j];
      cm += std::string(label_name(label_from_index(i))) + "," +
            std::string(label_name(label_from_index(j))) + "," + std::to_string(c) + "," +
            f(row == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(row)) + "\n";
    }
  }
  csv::write_file(dir / "confusion_matrix.csv", cm);

  std::string comp = "pid,source" + label_header() + "\n";
  std::string errors = "pid,label,truth_hours,predicted_hours,difference,absolute_error\n";
  std::string bland = "pid,label,mean_hours,difference_hours\n";
  for (std::size_t i = 0; i < report.truth_compositions.size(); ++i) {
    const Composition& t = report.truth_compositions[i];
    const Composition& p = report.predicted_compositions[i];
    comp += csv::escape(t.participant_id) + ",truth";
    for (double h : t.hours) comp += "," + f(h);
    comp += "\n" + csv::escape(p.participant_id) + ",predicted";
    for (double h : p.hours) comp += "," + f(h);
    comp += "\n";
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      const std::string label(label_name(label_from_index(k)));
      const double d = p.hours[k] - t.hours[k];
      errors += csv::escape(t.participant_id) + "," + label + "," + f(t.hours[k]) + "," +
                f(p.hours[k]) + "," + f(d) + "," + f(std::abs(d)) + "\n";
      bland += csv::escape(t.participant_id) + "," + label + "," +
               f((t.hours[k] + p.hours[k]) / 2.0) + "," + f(d) + "\n";
    }
  }
  csv::write_file(dir / "compositions.csv", comp);
  csv::write_file(dir / "composition_errors.csv", errors);
  csv::write_file(dir / "bland_altman.csv", bland);

  std::string agree =
      "label,n,mean_difference,sd_difference,loa_lower,loa_upper,pearson_r,mae,mae_sd,mape,"
      "mape_excluded,t_statistic,p_value\n";
  if (report.agreement) {
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      const LabelAgreement& g = report.agreement->per_label[k];
      agree += std::string(label_name(label_from_index(k))) + "," + std::to_string(g.n) + "," +
               f(g.mean_difference) + "," + f(g.sd_difference) + "," + f(g.loa_lower) + "," +
               f(g.loa_upper) + "," + f(g.pearson_r) + "," + f(g.mae) + "," + f(g.mae_sd) + "," +
               (g.mape ? f(*g.mape) : std::string()) + "," + std::to_string(g.mape_excluded) +
               "," + f(g.t_statistic) + "," + f(g.p_value) + "\n";
    }
  }
  csv::write_file(dir / "agreement.csv", agree);

  std::string sub = "grouping,group,participants,accuracy_mean,accuracy_sd,balanced_accuracy_mean,"
                    "balanced_accuracy_sd,cohen_kappa_mean,cohen_kappa_sd,macro_f1_mean,"
                    "macro_f1_sd\n";
  for (const SubgroupReport& s : report.subgroups) {
    const MetricsReport& m = s.metrics;
    sub += std::string(grouping_name(s.grouping)) + "," + csv::escape(s.group) + "," +
           std::to_string(s.participants.size()) + "," + f(m.accuracy.mean) + "," +
           f(m.accuracy.sd) + "," + f(m.balanced_accuracy.mean) + "," +
           f(m.balanced_accuracy.sd) + "," + f(m.cohen_kappa.mean) + "," + f(m.cohen_kappa.sd) +
           "," + f(m.macro_f1.mean) + "," + f(m.macro_f1.sd) + "\n";
  }
  csv::write_file(dir / "subgroups.csv", sub);
}

}  // namespace wristhar
