// wristhar command-line front end: synth, preprocess, train, predict, evaluate.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wristhar/csv.hpp"
#include "wristhar/errors.hpp"
#include "wristhar/external.hpp"
#include "wristhar/parallel.hpp"
#include "wristhar/pipeline.hpp"
#include "wristhar/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wristhar;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Settings {
  std::string output = "wristhar-out";
  std::uint64_t seed = 42;
  int jobs = 1;

  std::string recordings;
  std::string mapping;
  std::string metadata;
  std::string time_format = "auto";
  double irregular_resample_hz = 0.0;

  double target_rate_hz = 100.0;
  double cutoff_hz = 20.0;
  int filter_order = 4;
  double nonwear_sd_g = 0.015;
  double nonwear_min_s = 5400.0;
  double nonwear_window_s = 10.0;
  bool no_calibration = false;
  double window_s = 30.0;
  double min_annotated_fraction = 0.5;

  int trees = 1000;
  int max_features = 7;
  int max_depth = 0;
  int min_samples_leaf = 1;

  double smoothing_floor = 1e-6;
  double gap_tolerance_s = 0.5;
  double min_sleep_block_s = 3600.0;

  // synth
  std::size_t n_participants = 20;
  std::size_t without_mvpa = 0;
  int decimals = 5;
  // preprocess
  bool write_samples = false;
  // predict
  std::string external_preds;
  bool no_hmm = false;
  bool no_sleep_correction = false;
  // evaluate
  int k = 5;
  std::vector<std::string> subgroups;
};

fs::path recordings_dir(const Settings& s) {
  return s.recordings.empty() ? fs::path(s.output) / "recordings" : fs::path(s.recordings);
}
fs::path mapping_path(const Settings& s) {
  return s.mapping.empty() ? fs::path(s.output) / "label_mapping.csv" : fs::path(s.mapping);
}
fs::path metadata_path(const Settings& s) {
  return s.metadata.empty() ? fs::path(s.output) / "metadata.csv" : fs::path(s.metadata);
}
fs::path preprocessed_dir(const Settings& s) { return fs::path(s.output) / "preprocessed"; }
fs::path models_dir(const Settings& s) { return fs::path(s.output) / "models"; }

PreprocessOptions preprocess_options(const Settings& s) {
  PreprocessOptions o;
  o.target_rate_hz = s.target_rate_hz;
  o.filter = {s.cutoff_hz, s.filter_order};
  o.nonwear = {s.nonwear_sd_g, s.nonwear_min_s, s.nonwear_window_s};
  o.calibrate = !s.no_calibration;
  o.windows = {s.window_s, s.min_annotated_fraction};
  return o;
}

PipelineOptions pipeline_options(const Settings& s) {
  PipelineOptions o;
  o.forest.n_trees = s.trees;
  o.forest.max_features = s.max_features;
  if (s.max_depth > 0) o.forest.max_depth = s.max_depth;
  o.forest.min_samples_leaf = s.min_samples_leaf;
  o.forest.seed = s.seed;
  o.forest.jobs = s.jobs;
  o.hmm.smoothing_floor = s.smoothing_floor;
  o.hmm.gap_tolerance_s = s.gap_tolerance_s;
  o.window_duration_s = s.window_s;
  o.min_sleep_block_s = s.min_sleep_block_s;
  o.use_hmm = !s.no_hmm;
  o.sleep_correction = !s.no_sleep_correction;
  return o;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Records the command's effective configuration in <output>/run-manifest.json.
void update_manifest(const Settings& s, const std::string& command, const std::string& config) {
  const fs::path path = fs::path(s.output) / "run-manifest.json";
  json doc = json::object();
  if (fs::exists(path)) {
    try {
      doc = json::parse(csv::read_file(path));
    } catch (const json::exception&) {
      doc = json::object();
    }
  }
  doc["tool"] = "wristhar";
  doc["version"] = kVersion;
  doc["layout_version"] = 1;
  doc["artifacts"] = {{"feature_manifest", std::string(kFeatureManifestVersion)},
                      {"forest_format", "wristhar-forest 1"},
                      {"hmm_format", "wristhar-hmm 1"}};
  doc["commands"][command] = {
      {"config_hash", hex64(fnv1a(config))}, {"seed", s.seed}, {"config", config}};
  csv::write_file(path, doc.dump(2) + "\n");
}

std::vector<fs::path> list_files(const fs::path& dir, std::string_view suffix) {
  if (!fs::is_directory(dir)) throw InputError("directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix)) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string strip_suffix(std::string name, std::string_view suffix) {
  if (name.ends_with(suffix)) name.resize(name.size() - suffix.size());
  return name;
}

std::vector<ParticipantData> load_features(const Settings& s) {
  std::vector<ParticipantData> out;
  for (const fs::path& path : list_files(preprocessed_dir(s), ".features.csv")) {
    ParticipantData p;
    p.participant_id = strip_suffix(path.filename().string(), ".features.csv");
    p.rows = read_feature_csv(path);
    out.push_back(std::move(p));
  }
  if (out.empty()) {
    throw EmptyInputError("no feature files in " + preprocessed_dir(s).string() +
                          "; run preprocess first");
  }
  return out;
}

int cmd_synth(const Settings& s) {
  const SyntheticProfile profile{.participants_without_mvpa = s.without_mvpa};
  const SyntheticCohort cohort = generate_synthetic_cohort(s.n_participants, s.seed, profile);
  const fs::path dir = recordings_dir(s);
  parallel_for(cohort.recordings.size(), s.jobs, [&](std::size_t i) {
    const Recording& rec = cohort.recordings[i];
    write_recording_csv(dir / (rec.participant_id + ".csv"), rec, s.decimals);
  });
  write_label_mapping(mapping_path(s), cohort.mapping);
  write_subject_meta(metadata_path(s), cohort.meta);
  std::cout << "wrote " << cohort.recordings.size() << " recordings to " << dir.string() << "\n";
  return 0;
}

json interval_list(const std::vector<TimeInterval>& intervals) {
  json out = json::array();
  for (const TimeInterval& iv : intervals) out.push_back({iv.start, iv.end});
  return out;
}

int cmd_preprocess(const Settings& s) {
  const std::vector<fs::path> files = list_files(recordings_dir(s), ".csv");
  if (files.empty()) throw EmptyInputError("no recording CSVs in " + recordings_dir(s).string());
  std::optional<LabelMapping> mapping;
  if (fs::exists(mapping_path(s))) {
    mapping = load_label_mapping(mapping_path(s));
  } else if (!s.mapping.empty()) {
    throw InputError("label mapping not found: " + s.mapping);
  }
  CsvSchema schema;
  schema.time_format = parse_time_format(s.time_format);
  if (s.irregular_resample_hz > 0.0) schema.resample_hz = s.irregular_resample_hz;
  const PreprocessOptions options = preprocess_options(s);
  const fs::path out = preprocessed_dir(s);

  std::vector<json> entries(files.size());
  std::vector<std::string> failures(files.size());
  parallel_for(files.size(), s.jobs, [&](std::size_t i) {
    const fs::path& file = files[i];
    try {
      const Recording raw = read_recording_csv(file, schema);
      const PreprocessResult result =
          preprocess_recording(raw, mapping ? &*mapping : nullptr, options);
      std::vector<FeatureRow> rows;
      std::size_t labelled = 0;
      for (const Window& w : result.windows) {
        rows.push_back(featurize(w));
        if (w.label) ++labelled;
      }
      const std::string& pid = raw.participant_id;
      write_windows(out / (pid + ".windows.csv"),
                    s.write_samples ? out / (pid + ".samples.csv") : fs::path(), result.windows);
      write_feature_csv(out / (pid + ".features.csv"), rows);
      const CalibrationReport& c = result.calibration;
      entries[i] = {{"participant_id", pid},
                    {"file", file.filename().string()},
                    {"status", "ok"},
                    {"sample_rate_hz", raw.sample_rate_hz},
                    {"windows", result.windows.size()},
                    {"labelled_windows", labelled},
                    {"nonwear", interval_list(result.nonwear)},
                    {"calibration",
                     {{"applied", c.applied},
                      {"reason", c.reason},
                      {"gain", c.gain},
                      {"offset", c.offset},
                      {"iterations", c.iterations},
                      {"stationary_chunks", c.n_stationary},
                      {"initial_residual", c.initial_residual},
                      {"final_residual", c.final_residual}}}};
    } catch (const std::exception& e) {
      failures[i] = e.what();
      entries[i] = {{"file", file.filename().string()}, {"status", "failed"}, {"error", e.what()}};
    }
  });

  json log = {{"participants", entries}};
  csv::write_file(out / "preprocess-log.json", log.dump(2) + "\n");
  int failed = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (failures[i].empty()) continue;
    ++failed;
    std::cerr << "preprocess failed for " << files[i].filename().string() << ": " << failures[i]
              << "\n";
  }
  std::cout << "preprocessed " << files.size() - static_cast<std::size_t>(failed) << " of "
            << files.size() << " recordings into " << out.string() << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_train(const Settings& s) {
  const std::vector<ParticipantData> data = load_features(s);
  TrainedModel model;
  try {
    model = train_model(data, pipeline_options(s));
  } catch (const DegenerateTrainingError& e) {
    throw DegenerateTrainingError(std::string("train: ") + e.what());
  }
  save_forest(models_dir(s) / "forest.txt", model.forest);
  save_hmm(models_dir(s) / "hmm.txt", model.hmm);
  std::cout << "trained " << model.forest.trees.size() << " trees on " << data.size()
            << " participants; models in " << models_dir(s).string() << "\n";
  return 0;
}

void write_labels(const fs::path& path, const LabeledSequence& seq) {
  std::string out = "pid,time,label\n";
  for (std::size_t i = 0; i < seq.times.size(); ++i) {
    out += csv::escape(seq.participant_id) + "," + format_epoch_millis(seq.times[i]) + "," +
           std::string(label_name(seq.pred_labels[i])) + "\n";
  }
  csv::write_file(path, out);
}

std::vector<ExternalPredictions> load_external(const fs::path& path, TimeFormat format) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    files = list_files(path, ".csv");
  } else if (fs::exists(path)) {
    files.push_back(path);
  } else {
    throw InputError("external predictions not found: " + path.string());
  }
  std::vector<ExternalPredictions> all;
  for (const fs::path& f : files) {
    auto preds = load_external_predictions(f, format);
    all.insert(all.end(), std::make_move_iterator(preds.begin()),
               std::make_move_iterator(preds.end()));
  }
  return all;
}

int cmd_predict(const Settings& s) {
  const std::vector<ParticipantData> data = load_features(s);
  const PipelineOptions options = pipeline_options(s);
  const bool external = !s.external_preds.empty();
  const fs::path out = fs::path(s.output) / "predictions";

  HmmParams hmm;
  if (options.use_hmm) hmm = load_hmm(models_dir(s) / "hmm.txt");
  std::optional<ForestModel> forest;
  std::map<std::string, const ExternalPredictions*> external_of;
  std::vector<ExternalPredictions> external_preds;
  if (external) {
    external_preds = load_external(s.external_preds, parse_time_format(s.time_format));
    for (const ExternalPredictions& p : external_preds) {
      if (!external_of.emplace(p.participant_id, &p).second) {
        throw InputError("participant '" + p.participant_id +
                         "' appears in more than one external predictions file");
      }
    }
  } else {
    forest = load_forest(models_dir(s) / "forest.txt");
  }

  std::vector<std::string> failures(data.size());
  std::vector<Composition> compositions(data.size());
  std::mutex err_mutex;
  // Forest prediction is itself parallel across trees, so participants run in order.
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ParticipantData& p = data[i];
    try {
      LabeledSequence raw;
      if (external) {
        const auto it = external_of.find(p.participant_id);
        if (it == external_of.end()) {
          throw AlignmentError("no external predictions for '" + p.participant_id + "'");
        }
        std::vector<WindowRef> refs;
        for (const FeatureRow& row : p.rows) refs.push_back({p.participant_id, row.start_time, row.label});
        raw = align_predictions(*it->second, refs);
        if (raw.times.size() < refs.size()) {
          std::cerr << p.participant_id << ": " << refs.size() - raw.times.size()
                    << " windows without external predictions dropped\n";
        }
      } else {
        raw = predict_raw(*forest, p, s.jobs);
        const ExternalPredictions probs{p.participant_id, raw.times, *raw.pred_probs, "forest"};
        write_external_predictions(out / (p.participant_id + ".probs.csv"),
                                   std::span(&probs, 1));
      }
      const LabeledSequence final_seq = postprocess_sequence(raw, hmm, options);
      write_labels(out / (p.participant_id + ".labels.csv"), final_seq);
      compositions[i] = composition(p.participant_id, final_seq.pred_labels, options.window_duration_s);
    } catch (const std::exception& e) {
      std::lock_guard lock(err_mutex);
      failures[i] = e.what();
    }
  }

  std::string comp = "pid";
  for (IntensityLabel l : kAllLabels) comp += "," + std::string(label_name(l)) + "_hours";
  comp += "\n";
  int failed = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!failures[i].empty()) {
      ++failed;
      std::cerr << "predict failed for " << data[i].participant_id << ": " << failures[i] << "\n";
      continue;
    }
    comp += csv::escape(compositions[i].participant_id);
    for (double h : compositions[i].hours) comp += "," + csv::format_double(h);
    comp += "\n";
  }
  csv::write_file(out / "compositions.csv", comp);
  std::cout << "predicted " << data.size() - static_cast<std::size_t>(failed) << " of "
            << data.size() << " participants into " << out.string() << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_evaluate(const Settings& s) {
  std::vector<Grouping> groupings;
  for (const std::string& g : s.subgroups) groupings.push_back(parse_grouping(g));
  const std::vector<ParticipantData> data = load_features(s);
  std::vector<SubjectMeta> meta;
  if (!groupings.empty()) {
    if (!fs::exists(metadata_path(s))) {
      throw MetadataError("subgroup reports need metadata; not found: " + metadata_path(s).string());
    }
    meta = load_subject_meta(metadata_path(s));
  }

  CvReport report = run_pipeline_cv(data, pipeline_options(s), CvOptions{s.k, s.seed});
  for (Grouping g : groupings) {
    auto parts = subgroup_report(report.metrics, report.truth_compositions,
                                 report.predicted_compositions, meta, g);
    report.subgroups.insert(report.subgroups.end(), parts.begin(), parts.end());
  }
  const fs::path out = fs::path(s.output) / "reports";
  write_report_bundle(out, report);
  const MetricsReport& m = report.metrics;
  std::printf("participants %zu  folds %d\n", m.participants.size(), report.folds.k);
  std::printf("accuracy          %.4f +/- %.4f\n", m.accuracy.mean, m.accuracy.sd);
  std::printf("balanced accuracy %.4f +/- %.4f\n", m.balanced_accuracy.mean, m.balanced_accuracy.sd);
  std::printf("cohen kappa       %.4f +/- %.4f\n", m.cohen_kappa.mean, m.cohen_kappa.sd);
  std::printf("macro F1          %.4f +/- %.4f\n", m.macro_f1.mean, m.macro_f1.sd);
  std::printf("report bundle in %s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wrist accelerometer activity-intensity pipeline"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "Read options from an INI or TOML file");
  app.require_subcommand(1);
  app.fallthrough();
  Settings s;

  app.add_option("--output,-o", s.output, "Output directory")->capture_default_str();
  app.add_option("--seed", s.seed, "Seed for every random component")->capture_default_str();
  app.add_option("--jobs,-j", s.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--recordings", s.recordings, "Recording CSV directory (default <output>/recordings)");
  app.add_option("--mapping", s.mapping, "Annotation mapping CSV (default <output>/label_mapping.csv)");
  app.add_option("--metadata", s.metadata, "Participant metadata CSV (default <output>/metadata.csv)");
  app.add_option("--time-format", s.time_format, "auto, epoch_ms or iso8601")->capture_default_str();
  app.add_option("--irregular-resample-hz", s.irregular_resample_hz,
                 "Accept irregular sampling and resample to this rate (0 rejects it)")
      ->capture_default_str();
  app.add_option("--target-rate", s.target_rate_hz, "Resampling rate in Hz")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--cutoff", s.cutoff_hz, "Low-pass cutoff in Hz")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--filter-order", s.filter_order, "Butterworth order")
      ->check(CLI::Range(1, 16))->capture_default_str();
  app.add_option("--nonwear-sd", s.nonwear_sd_g, "Non-wear SD threshold in g")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--nonwear-min-duration", s.nonwear_min_s, "Minimum non-wear duration in s")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--nonwear-window", s.nonwear_window_s, "Non-wear chunk length in s")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--no-calibration", s.no_calibration, "Skip auto-calibration");
  app.add_option("--window", s.window_s, "Window duration in s")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--min-annotated-fraction", s.min_annotated_fraction,
                 "Fraction of labelled samples needed for a window label")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app.add_option("--trees", s.trees, "Forest size")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--max-features", s.max_features, "Features considered per split")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--max-depth", s.max_depth, "Tree depth limit (0 = none)")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--min-samples-leaf", s.min_samples_leaf, "Minimum leaf weight")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--smoothing-floor", s.smoothing_floor, "HMM probability floor")
      ->check(CLI::Range(0.0, 0.25))->capture_default_str();
  app.add_option("--gap-tolerance", s.gap_tolerance_s, "Window gap tolerance in s")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--min-sleep-block", s.min_sleep_block_s, "Shortest kept sleep run in s")
      ->check(CLI::NonNegativeNumber)->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled cohort");
  synth->add_option("--n", s.n_participants, "Number of participants")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000}))->capture_default_str();
  synth->add_option("--without-mvpa", s.without_mvpa,
                    "Generate the first N participants without mvpa")->capture_default_str();
  synth->add_option("--decimals", s.decimals, "Decimal places for x, y, z")
      ->check(CLI::Range(1, 17))->capture_default_str();

  auto* preprocess = app.add_subcommand("preprocess", "Filter, clean, calibrate, window, featurize");
  preprocess->add_flag("--write-samples", s.write_samples, "Also write per-window samples");

  auto* train = app.add_subcommand("train", "Train the forest and HMM on all labelled windows");

  auto* predict = app.add_subcommand("predict", "Label windows with the trained models");
  predict->add_option("--external-preds", s.external_preds,
                      "Per-window probabilities CSV (file or directory) instead of the forest");
  predict->add_flag("--no-hmm", s.no_hmm, "Skip HMM smoothing");
  predict->add_flag("--no-sleep-correction", s.no_sleep_correction, "Skip sleep-block correction");

  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate and write the report bundle");
  evaluate->add_option("--k", s.k, "Number of folds")->check(CLI::Range(2, 1000))->capture_default_str();
  evaluate->add_option("--subgroups", s.subgroups, "Subgroup reports: age_band, sex")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string config = app.config_to_str(true, false);
  try {
    int rc = 0;
    std::string command;
    if (*synth) {
      command = "synth";
      rc = cmd_synth(s);
    } else if (*preprocess) {
      command = "preprocess";
      rc = cmd_preprocess(s);
    } else if (*train) {
      command = "train";
      rc = cmd_train(s);
    } else if (*predict) {
      command = "predict";
      rc = cmd_predict(s);
    } else {
      command = "evaluate";
      rc = cmd_evaluate(s);
    }
    update_manifest(s, command, config);
    return rc;
  } catch (const Error& e) {
    std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
