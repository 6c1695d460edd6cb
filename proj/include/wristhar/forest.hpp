#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wristhar/labels.hpp"

namespace wristhar {

/// Row-major n x d matrix of features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  void append_row(std::span<const double> values);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct ForestConfig {
  int n_trees = 1000;
  int max_features = 7;
  std::optional<int> max_depth;  // unbounded when empty
  int min_samples_leaf = 1;
  std::uint64_t seed = 0;
  bool bootstrap = true;  // without it every tree sees all rows and OOB is empty
  int jobs = 1;           // worker threads; results do not depend on it
};

/// Axis-aligned binary tree. Rows with value <= threshold go left.
struct DecisionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    ClassProbs counts{};  // weighted class counts of in-bag rows reaching the node
  };
  std::vector<Node> nodes;  // nodes[0] is the root

  /// Leaf reached by `features`.
  const Node& leaf_for(std::span<const double> features) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;
};

struct ForestModel {
  ForestConfig config;
  std::vector<std::string> feature_names;
  std::string feature_manifest_version;
  std::vector<DecisionTree> trees;
  // Bootstrap multiplicity of each training row per tree; kept in memory for
  // OOB bookkeeping and inspection, not persisted.
  std::vector<std::vector<std::uint32_t>> in_bag_counts;
  std::vector<ClassProbs> oob;     // n_train rows
  std::vector<std::uint8_t> oob_valid;  // 1 when at least one tree left the row out

  std::size_t n_features() const { return feature_names.size(); }
};

/// Trains on n rows with n labels. Tree t draws its bootstrap from an RNG
/// seeded with (config.seed, t), so results are identical for any `jobs`.
/// Throws DegenerateTrainingError for fewer than two rows or distinct labels,
/// InputError for non-finite features, ConfigurationError for bad config.
ForestModel train_forest(const FeatureMatrix& features, std::span<const IntensityLabel> labels,
                         const ForestConfig& config,
                         std::vector<std::string> feature_names = {},
                         std::string feature_manifest_version = {});

/// Soft-vote class probabilities; each row sums to 1. Throws ShapeError on a
/// column-count mismatch.
std::vector<ClassProbs> predict_proba(const ForestModel& model, const FeatureMatrix& features,
                                      int jobs = 1);

/// Argmax of predict_proba with ties toward the lower canonical index.
std::vector<IntensityLabel> predict_labels(const ForestModel& model, const FeatureMatrix& features,
                                           int jobs = 1);

/// Versioned text format; thresholds are written in round-trip precision.
void save_forest(const std::filesystem::path& path, const ForestModel& model);
ForestModel load_forest(const std::filesystem::path& path);

}  // namespace wristhar
