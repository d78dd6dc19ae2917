#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "archattr/dataset.hpp"

namespace archattr::ml {

enum class ForestKind { RandomForest, ExtraTrees };

std::string_view to_string(ForestKind kind) noexcept;

struct ModelSpec {
  ForestKind kind = ForestKind::RandomForest;
  int n_trees = 100;
  std::optional<int> max_depth;        // unlimited when empty
  int min_samples_leaf = 1;
  std::optional<int> features_per_split;  // sqrt(p) when empty
  bool bootstrap = true;
  unsigned threads = 0;                // 0 = hardware concurrency

  static ModelSpec random_forest() { return {}; }
  static ModelSpec extra_trees() {
    ModelSpec s;
    s.kind = ForestKind::ExtraTrees;
    s.bootstrap = false;
    return s;
  }

  // RF must bootstrap and ERT must not; counts must be positive.
  void validate() const;
  int resolve_features(std::size_t num_features) const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<double, 2> counts{};  // class counts of the samples reaching the node
};

class DecisionTree {
 public:
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  // Mean decrease in impurity, normalized to sum 1 (all zero for a stump).
  const std::vector<double>& importances() const noexcept { return importances_; }

  int leaf_index(const double* row, Eigen::Index stride) const;
  // P(healthy) at the leaf reached by row `r` of `x`.
  double predict_healthy(const Eigen::MatrixXd& x, Eigen::Index r) const;

 private:
  friend class TreeBuilder;
  std::vector<TreeNode> nodes_;
  std::vector<double> importances_;
};

struct ImportanceSummary {
  std::vector<double> mean;
  std::vector<double> std_error;
};

class Ensemble {
 public:
  const ModelSpec& spec() const noexcept { return spec_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  std::size_t num_features() const noexcept { return num_features_; }

  std::vector<int> predict(const Eigen::MatrixXd& x) const;
  double accuracy(const Dataset& d) const;

 private:
  friend Ensemble fit_ensemble(const ModelSpec&, const Dataset&, std::uint64_t);
  ModelSpec spec_;
  std::vector<DecisionTree> trees_;
  std::size_t num_features_ = 0;
};

// Grows spec.n_trees Gini trees. Tree t is seeded from derive_seed(seed, t),
// so results do not depend on the thread count. Throws NotBinary when the
// labels are missing or single-class and TooFewSamples when a class has
// fewer than two rows.
Ensemble fit_ensemble(const ModelSpec& spec, const Dataset& train, std::uint64_t seed);

// Mean of the per-tree normalized importances over trees that split at least
// once, renormalized to sum 1, and the standard error of that mean.
ImportanceSummary feature_importances(const Ensemble& e);

struct CvResult {
  std::vector<double> fold_scores;
  double mean = 0.0;
  double std = 0.0;        // population standard deviation of fold scores
  double std_error = 0.0;  // sample standard deviation / sqrt(k)
};

CvResult kfold_cv(const ModelSpec& spec, const Dataset& d, std::size_t k, std::uint64_t seed);

struct PruneStep {
  std::size_t removed_count = 0;
  std::string removed_feature;  // empty for the full feature set
  CvResult cv;
};

struct PruneCurve {
  std::vector<std::string> ranking;  // most important first, fixed up front
  std::vector<double> initial_importance;
  std::vector<PruneStep> steps;
};

// Ranks features once from a fit on `d` (ties by column order), then drops
// the least important remaining feature per that fixed ranking and re-runs
// k-fold CV, until a single feature remains.
PruneCurve prune_loop(const ModelSpec& spec, const Dataset& d, std::size_t k,
                      std::uint64_t seed);

}  // namespace archattr::ml
