#include "wristhar/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

#include "wristhar/csv.hpp"
#include "wristhar/errors.hpp"
#include "wristhar/parallel.hpp"

namespace wristhar {

void FeatureMatrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw ShapeError("row length does not match matrix width");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

const DecisionTree::Node& DecisionTree::leaf_for(std::span<const double> features) const {
  const Node* node = &nodes.front();
  while (node->feature >= 0) {
    node = &nodes[static_cast<std::size_t>(
        features[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                              : node->right)];
  }
  return *node;
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::size_t best = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [index, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const Node& n = nodes[static_cast<std::size_t>(index)];
    if (n.feature >= 0) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return best;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.feature < 0; }));
}

namespace {

ClassProbs normalized(const ClassProbs& counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  ClassProbs out{};
  if (total <= 0.0) return out;
  for (std::size_t c = 0; c < kNumLabels; ++c) out[c] = counts[c] / total;
  return out;
}

std::mt19937_64 tree_rng(std::uint64_t seed, std::size_t tree) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tree), static_cast<std::uint32_t>(tree >> 32)};
  return std::mt19937_64(seq);
}

// sum_c count_c^2 / total: maximizing the sum over both children minimizes
// the weighted Gini impurity.
double gini_proxy(const ClassProbs& counts, double total) {
  if (total <= 0.0) return 0.0;
  double s = 0.0;
  for (double c : counts) s += c * c;
  return s / total;
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const IntensityLabel> y,
              std::span<const std::uint32_t> weights, const ForestConfig& config,
              std::mt19937_64& rng)
      : x_(x), y_(y), weights_(weights), config_(config), rng_(rng) {}

  DecisionTree build() {
    std::vector<std::uint32_t> rows;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (weights_[i] > 0) rows.push_back(static_cast<std::uint32_t>(i));
    }
    rows_ = std::move(rows);
    features_.resize(x_.cols());
    std::iota(features_.begin(), features_.end(), 0);

    struct Pending {
      int node;
      std::size_t begin, end;
      int depth;
    };
    DecisionTree tree;
    tree.nodes.emplace_back();
    std::vector<Pending> stack{{0, 0, rows_.size(), 0}};
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      ClassProbs counts{};
      for (std::size_t i = p.begin; i < p.end; ++i) {
        counts[index_of(y_[rows_[i]])] += weights_[rows_[i]];
      }
      tree.nodes[static_cast<std::size_t>(p.node)].counts = counts;
      const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
      const auto nonzero = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; });
      if (nonzero <= 1 || total < 2.0 * config_.min_samples_leaf ||
          (config_.max_depth && p.depth >= *config_.max_depth)) {
        continue;
      }
      const auto split = find_split(p.begin, p.end, counts, total);
      if (!split) continue;

      const auto mid_it = std::partition(
          rows_.begin() + static_cast<std::ptrdiff_t>(p.begin),
          rows_.begin() + static_cast<std::ptrdiff_t>(p.end),
          [&](std::uint32_t r) { return x_(r, split->feature) <= split->threshold; });
      const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
      node.feature = static_cast<int>(split->feature);
      node.threshold = split->threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, mid, p.end, p.depth + 1});
      stack.push_back({left, p.begin, mid, p.depth + 1});
    }
    return tree;
  }

 private:
  struct Split {
    std::size_t feature;
    double threshold;
  };

  std::optional<Split> find_split(std::size_t begin, std::size_t end, const ClassProbs& counts,
                                  double total) {
    std::optional<Split> best;
    double best_score = -1.0;
    const double min_leaf = config_.min_samples_leaf;
    int visited = 0;
    const std::size_t d = features_.size();
    for (std::size_t j = 0; j < d && visited < config_.max_features; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, d - 1);
      std::swap(features_[j], features_[pick(rng_)]);
      const std::size_t f = features_[j];

      sorted_.clear();
      for (std::size_t i = begin; i < end; ++i) sorted_.emplace_back(x_(rows_[i], f), rows_[i]);
      std::sort(sorted_.begin(), sorted_.end());
      if (sorted_.front().first == sorted_.back().first) continue;  // constant here
      ++visited;

      ClassProbs left{};
      double left_total = 0.0;
      for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
        const auto row = sorted_[i].second;
        const double w = weights_[row];
        left[index_of(y_[row])] += w;
        left_total += w;
        const double lo = sorted_[i].first;
        const double hi = sorted_[i + 1].first;
        if (!(lo < hi)) continue;
        const double right_total = total - left_total;
        if (left_total < min_leaf || right_total < min_leaf) continue;
        ClassProbs right{};
        for (std::size_t c = 0; c < kNumLabels; ++c) right[c] = counts[c] - left[c];
        const double score = gini_proxy(left, left_total) + gini_proxy(right, right_total);
        if (score > best_score) {
          best_score = score;
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = Split{f, threshold};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const IntensityLabel> y_;
  std::span<const std::uint32_t> weights_;
  const ForestConfig& config_;
  std::mt19937_64& rng_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, std::uint32_t>> sorted_;
};

void check_config(const ForestConfig& config, std::size_t n_features) {
  if (config.n_trees < 1) throw ConfigurationError("n_trees must be positive");
  if (config.max_features < 1 || static_cast<std::size_t>(config.max_features) > n_features) {
    throw ConfigurationError("max_features must lie in [1, " + std::to_string(n_features) + "]");
  }
  if (config.min_samples_leaf < 1) throw ConfigurationError("min_samples_leaf must be positive");
  if (config.max_depth && *config.max_depth < 1) {
    throw ConfigurationError("max_depth must be positive when set");
  }
}

}  // namespace

ForestModel train_forest(const FeatureMatrix& features, std::span<const IntensityLabel> labels,
                         const ForestConfig& config, std::vector<std::string> feature_names,
                         std::string feature_manifest_version) {
  const std::size_t n = features.rows();
  if (labels.size() != n) throw ShapeError("label count does not match feature rows");
  if (n < 2) throw DegenerateTrainingError("forest training needs at least two rows");
  check_config(config, features.cols());
  std::array<bool, kNumLabels> seen{};
  for (IntensityLabel l : labels) seen[index_of(l)] = true;
  if (std::count(seen.begin(), seen.end(), true) < 2) {
    throw DegenerateTrainingError("forest training needs at least two distinct labels");
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (double v : features.row(r)) {
      if (!std::isfinite(v)) throw InputError("non-finite feature in row " + std::to_string(r));
    }
  }
  if (feature_names.empty()) {
    for (std::size_t c = 0; c < features.cols(); ++c) feature_names.push_back("f" + std::to_string(c));
  }
  if (feature_names.size() != features.cols()) {
    throw ShapeError("feature name count does not match matrix width");
  }

  ForestModel model;
  model.config = config;
  model.feature_names = std::move(feature_names);
  model.feature_manifest_version = std::move(feature_manifest_version);
  const auto n_trees = static_cast<std::size_t>(config.n_trees);
  model.trees.resize(n_trees);
  model.in_bag_counts.resize(n_trees);

  parallel_for(n_trees, config.jobs, [&](std::size_t t) {
    std::mt19937_64 rng = tree_rng(config.seed, t);
    std::vector<std::uint32_t> weights(n, 1);
    if (config.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0);
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (std::size_t i = 0; i < n; ++i) ++weights[draw(rng)];
    }
    model.trees[t] = TreeBuilder(features, labels, weights, config, rng).build();
    model.in_bag_counts[t] = std::move(weights);
  });

  model.oob.assign(n, ClassProbs{});
  model.oob_valid.assign(n, 0);
  parallel_for(n, config.jobs, [&](std::size_t i) {
    ClassProbs sum{};
    std::size_t used = 0;
    for (std::size_t t = 0; t < n_trees; ++t) {
      if (model.in_bag_counts[t][i] != 0) continue;
      const ClassProbs p = normalized(model.trees[t].leaf_for(features.row(i)).counts);
      for (std::size_t c = 0; c < kNumLabels; ++c) sum[c] += p[c];
      ++used;
    }
    if (used == 0) return;
    for (double& v : sum) v /= static_cast<double>(used);
    model.oob[i] = sum;
    model.oob_valid[i] = 1;
  });
  return model;
}

std::vector<ClassProbs> predict_proba(const ForestModel& model, const FeatureMatrix& features,
                                      int jobs) {
  if (features.rows() > 0 && features.cols() != model.n_features()) {
    throw ShapeError("feature matrix has " + std::to_string(features.cols()) +
                     " columns, model expects " + std::to_string(model.n_features()));
  }
  if (model.trees.empty()) throw InputError("forest has no trees");
  std::vector<ClassProbs> out(features.rows());
  parallel_for(features.rows(), jobs, [&](std::size_t r) {
    ClassProbs sum{};
    for (const DecisionTree& tree : model.trees) {
      const ClassProbs p = normalized(tree.leaf_for(features.row(r)).counts);
      for (std::size_t c = 0; c < kNumLabels; ++c) sum[c] += p[c];
    }
    for (double& v : sum) v /= static_cast<double>(model.trees.size());
    out[r] = sum;
  });
  return out;
}

std::vector<IntensityLabel> predict_labels(const ForestModel& model, const FeatureMatrix& features,
                                           int jobs) {
  std::vector<IntensityLabel> out;
  for (const ClassProbs& p : predict_proba(model, features, jobs)) out.push_back(argmax_label(p));
  return out;
}

namespace {
constexpr std::string_view kForestMagic = "wristhar-forest";
constexpr int kForestFormatVersion = 1;
}  // namespace

void save_forest(const std::filesystem::path& path, const ForestModel& model) {
  std::string out;
  out += std::string(kForestMagic) + " " + std::to_string(kForestFormatVersion) + "\n";
  out += "feature_manifest " +
         (model.feature_manifest_version.empty() ? std::string("-") : model.feature_manifest_version) +
         "\n";
  const ForestConfig& c = model.config;
  out += "n_trees " + std::to_string(c.n_trees) + "\n";
  out += "max_features " + std::to_string(c.max_features) + "\n";
  out += "max_depth " + (c.max_depth ? std::to_string(*c.max_depth) : std::string("none")) + "\n";
  out += "min_samples_leaf " + std::to_string(c.min_samples_leaf) + "\n";
  out += "seed " + std::to_string(c.seed) + "\n";
  out += "bootstrap " + std::to_string(c.bootstrap ? 1 : 0) + "\n";
  out += "features " + std::to_string(model.feature_names.size()) + "\n";
  for (const auto& name : model.feature_names) out += name + "\n";
  out += "trees " + std::to_string(model.trees.size()) + "\n";
  for (const DecisionTree& tree : model.trees) {
    out += "tree " + std::to_string(tree.nodes.size()) + "\n";
    for (const auto& node : tree.nodes) {
      out += std::to_string(node.feature) + " " + csv::format_double(node.threshold) + " " +
             std::to_string(node.left) + " " + std::to_string(node.right);
      for (double count : node.counts) out += " " + csv::format_double(count);
      out += "\n";
    }
  }
  out += "end\n";
  csv::write_file(path, out);
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::string text) : text_(std::move(text)) {}

  std::string_view next() {
    if (pos_ >= text_.size()) throw ParseError("unexpected end of model file");
    std::size_t stop = text_.find('\n', pos_);
    if (stop == std::string::npos) stop = text_.size();
    std::string_view line(text_.data() + pos_, stop - pos_);
    pos_ = stop + 1;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  }

  // "key value" line; returns value.
  std::string_view keyed(std::string_view key) {
    const std::string_view line = next();
    if (!line.starts_with(key) || line.size() <= key.size() || line[key.size()] != ' ') {
      throw ParseError("model file line " + std::to_string(line_) + ": expected '" +
                       std::string(key) + "'");
    }
    return line.substr(key.size() + 1);
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ') ++pos;
    if (pos > start) out.push_back(line.substr(start, pos - start));
  }
  return out;
}

}  // namespace

ForestModel load_forest(const std::filesystem::path& path) {
  LineReader in(csv::read_file(path));
  const auto header = split_spaces(in.next());
  if (header.size() != 2 || header[0] != kForestMagic) {
    throw ParseError(path.string() + " is not a forest model file");
  }
  if (csv::parse_int(header[1], "format version") != kForestFormatVersion) {
    throw CompatibilityError(path.string() + ": unsupported forest format version");
  }
  ForestModel model;
  const std::string_view manifest = in.keyed("feature_manifest");
  model.feature_manifest_version = manifest == "-" ? std::string() : std::string(manifest);
  ForestConfig& c = model.config;
  c.n_trees = static_cast<int>(csv::parse_int(in.keyed("n_trees"), "n_trees"));
  c.max_features = static_cast<int>(csv::parse_int(in.keyed("max_features"), "max_features"));
  const std::string_view depth = in.keyed("max_depth");
  if (depth != "none") c.max_depth = static_cast<int>(csv::parse_int(depth, "max_depth"));
  c.min_samples_leaf =
      static_cast<int>(csv::parse_int(in.keyed("min_samples_leaf"), "min_samples_leaf"));
  c.seed = std::stoull(std::string(in.keyed("seed")));
  c.bootstrap = csv::parse_int(in.keyed("bootstrap"), "bootstrap") != 0;
  const auto n_features = csv::parse_int(in.keyed("features"), "features");
  for (long long i = 0; i < n_features; ++i) model.feature_names.emplace_back(in.next());
  const auto n_trees = csv::parse_int(in.keyed("trees"), "trees");
  model.trees.resize(static_cast<std::size_t>(n_trees));
  for (auto& tree : model.trees) {
    const auto n_nodes = csv::parse_int(in.keyed("tree"), "tree");
    tree.nodes.resize(static_cast<std::size_t>(n_nodes));
    for (auto& node : tree.nodes) {
      const auto parts = split_spaces(in.next());
      if (parts.size() != 4 + kNumLabels) throw ParseError("malformed tree node in model file");
      node.feature = static_cast<int>(csv::parse_int(parts[0], "feature"));
      node.threshold = csv::parse_double(parts[1], "threshold");
      node.left = static_cast<int>(csv::parse_int(parts[2], "left"));
      node.right = static_cast<int>(csv::parse_int(parts[3], "right"));
      for (std::size_t k = 0; k < kNumLabels; ++k) {
        node.counts[k] = csv::parse_double(parts[4 + k], "count");
      }
      const auto limit = static_cast<int>(n_nodes);
      if (node.feature >= static_cast<int>(n_features) ||
          (node.feature >= 0 && (node.left <= 0 || node.left >= limit || node.right <= 0 ||
                                 node.right >= limit))) {
        throw ParseError("tree node references out of range");
      }
    }
    if (tree.nodes.empty()) throw ParseError("empty tree in model file");
  }
  if (in.next() != "end") throw ParseError("missing end marker in model file");
  return model;
}

}  // namespace wristhar
