#include "archattr/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "archattr/error.hpp"
#include "archattr/parallel.hpp"
#include "archattr/rng.hpp"

namespace archattr::ml {

std::string_view to_string(ForestKind kind) noexcept {
  return kind == ForestKind::RandomForest ? "rf" : "ert";
}

void ModelSpec::validate() const {
  if (n_trees < 1) throw Error(ErrorCode::Config, "n_trees must be positive");
  if (min_samples_leaf < 1) throw Error(ErrorCode::Config, "min_samples_leaf must be positive");
  if (max_depth && *max_depth < 1) throw Error(ErrorCode::Config, "max_depth must be positive");
  if (features_per_split && *features_per_split < 1) {
    throw Error(ErrorCode::Config, "features_per_split must be positive");
  }
  if (kind == ForestKind::RandomForest && !bootstrap) {
    throw Error(ErrorCode::Config, "random forest requires bootstrap sampling");
  }
  if (kind == ForestKind::ExtraTrees && bootstrap) {
    throw Error(ErrorCode::Config, "extremely randomized trees use the full sample");
  }
}

int ModelSpec::resolve_features(std::size_t num_features) const {
  const int p = static_cast<int>(num_features);
  if (features_per_split) return std::min(*features_per_split, p);
  return std::max(1, static_cast<int>(std::sqrt(static_cast<double>(p))));
}

int DecisionTree::leaf_index(const double* row, Eigen::Index stride) const {
  int node = 0;
  while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = nodes_[static_cast<std::size_t>(node)];
    node = row[n.feature * stride] <= n.threshold ? n.left : n.right;
  }
  return node;
}

double DecisionTree::predict_healthy(const Eigen::MatrixXd& x, Eigen::Index r) const {
  const TreeNode& leaf =
      nodes_[static_cast<std::size_t>(leaf_index(x.data() + r, x.rows()))];
  return leaf.counts[1] / (leaf.counts[0] + leaf.counts[1]);
}

// Grows one tree depth-first; node ids follow creation order.
class TreeBuilder {
 public:
  TreeBuilder(const ModelSpec& spec, const Eigen::MatrixXd& x, const std::vector<int>& labels,
              std::uint64_t seed)
      : spec_(spec), x_(x), labels_(labels), rng_(seed) {
    const std::size_t n = static_cast<std::size_t>(x.rows());
    samples_.resize(n);
    if (spec.bootstrap) {
      for (auto& s : samples_) s = static_cast<std::size_t>(rng_.below(n));
    } else {
      std::iota(samples_.begin(), samples_.end(), std::size_t{0});
    }
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
    mtry_ = spec.resolve_features(features_.size());
    buffer_.reserve(n);
  }

  DecisionTree build() {
    DecisionTree tree;
    tree.importances_.assign(features_.size(), 0.0);
    const double root_weight = static_cast<double>(samples_.size());

    struct Task {
      int node;
      std::size_t begin, end;
      int depth;
    };
    std::vector<Task> stack;
    tree.nodes_.push_back(make_node(0, samples_.size()));
    stack.push_back({0, 0, samples_.size(), 0});

    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      const auto counts = tree.nodes_[static_cast<std::size_t>(task.node)].counts;
      const std::size_t n = task.end - task.begin;
      const bool pure = counts[0] == 0.0 || counts[1] == 0.0;
      const bool depth_limited = spec_.max_depth && task.depth >= *spec_.max_depth;
      if (pure || depth_limited || n < 2 * static_cast<std::size_t>(spec_.min_samples_leaf) ||
          n < 2) {
        continue;
      }
      const Split split = find_split(task.begin, task.end);
      if (split.feature < 0) continue;

      auto first = samples_.begin() + static_cast<long>(task.begin);
      auto last = samples_.begin() + static_cast<long>(task.end);
      const auto col = x_.col(split.feature);
      const auto mid = std::partition(first, last, [&](std::size_t s) {
        return col(static_cast<Eigen::Index>(s)) <= split.threshold;
      });
      const std::size_t pivot = static_cast<std::size_t>(mid - samples_.begin());

      const int left = static_cast<int>(tree.nodes_.size());
      tree.nodes_.push_back(make_node(task.begin, pivot));
      const int right = static_cast<int>(tree.nodes_.size());
      tree.nodes_.push_back(make_node(pivot, task.end));
      TreeNode& parent = tree.nodes_[static_cast<std::size_t>(task.node)];
      parent.feature = split.feature;
      parent.threshold = split.threshold;
      parent.left = left;
      parent.right = right;

      const auto weighted_gini = [](const std::array<double, 2>& c) {
        const double w = c[0] + c[1];
        return w - (c[0] * c[0] + c[1] * c[1]) / w;
      };
      const double decrease = weighted_gini(parent.counts) -
                              weighted_gini(tree.nodes_[static_cast<std::size_t>(left)].counts) -
                              weighted_gini(tree.nodes_[static_cast<std::size_t>(right)].counts);
      tree.importances_[static_cast<std::size_t>(split.feature)] += decrease / root_weight;

      stack.push_back({right, pivot, task.end, task.depth + 1});
      stack.push_back({left, task.begin, pivot, task.depth + 1});
    }

    const double total = std::accumulate(tree.importances_.begin(), tree.importances_.end(), 0.0);
    if (total > 0.0) {
      for (double& v : tree.importances_) v /= total;
    } else {
      std::fill(tree.importances_.begin(), tree.importances_.end(), 0.0);
    }
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = -1.0;
  };

  TreeNode make_node(std::size_t begin, std::size_t end) const {
    TreeNode node;
    for (std::size_t i = begin; i < end; ++i) {
      node.counts[static_cast<std::size_t>(labels_[samples_[i]])] += 1.0;
    }
    return node;
  }

  // Candidate features are drawn without replacement; features constant in
  // the node do not count towards mtry.
  Split find_split(std::size_t begin, std::size_t end) {
    Split best;
    int visited = 0;
    const std::size_t p = features_.size();
    for (std::size_t i = 0; i < p && visited < mtry_; ++i) {
      std::swap(features_[i], features_[i + rng_.below(p - i)]);
      const int f = features_[i];
      const bool informative = spec_.kind == ForestKind::RandomForest
                                   ? best_threshold(f, begin, end, best)
                                   : random_threshold(f, begin, end, best);
      visited += informative;
    }
    return best;
  }

  static double child_score(double a0, double a1, double b0, double b1) {
    return (a0 * a0 + a1 * a1) / (a0 + a1) + (b0 * b0 + b1 * b1) / (b0 + b1);
  }

  bool best_threshold(int f, std::size_t begin, std::size_t end, Split& best) {
    const auto col = x_.col(f);
    buffer_.clear();
    double total[2] = {0.0, 0.0};
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t s = samples_[i];
      buffer_.emplace_back(col(static_cast<Eigen::Index>(s)), labels_[s]);
      total[labels_[s]] += 1.0;
    }
    std::sort(buffer_.begin(), buffer_.end());
    if (buffer_.front().first == buffer_.back().first) return false;

    const std::size_t n = buffer_.size();
    const std::size_t min_leaf = static_cast<std::size_t>(spec_.min_samples_leaf);
    double left[2] = {0.0, 0.0};
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left[buffer_[i].second] += 1.0;
      const double lo = buffer_[i].first;
      const double hi = buffer_[i + 1].first;
      if (lo == hi) continue;
      const std::size_t nl = i + 1;
      if (nl < min_leaf || n - nl < min_leaf) continue;
      const double score =
          child_score(left[0], left[1], total[0] - left[0], total[1] - left[1]);
      if (score > best.score) {
        double threshold = lo + (hi - lo) / 2.0;
        if (!(threshold < hi)) threshold = lo;
        best = {f, threshold, score};
      }
    }
    return true;
  }

  bool random_threshold(int f, std::size_t begin, std::size_t end, Split& best) {
    const auto col = x_.col(f);
    double lo = col(static_cast<Eigen::Index>(samples_[begin]));
    double hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double v = col(static_cast<Eigen::Index>(samples_[i]));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo == hi) return false;
    double threshold = rng_.uniform(lo, hi);
    if (!(threshold < hi)) threshold = lo;

    double left[2] = {0.0, 0.0};
    double right[2] = {0.0, 0.0};
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t s = samples_[i];
      (col(static_cast<Eigen::Index>(s)) <= threshold ? left : right)[labels_[s]] += 1.0;
    }
    const double nl = left[0] + left[1];
    const double nr = right[0] + right[1];
    const double min_leaf = spec_.min_samples_leaf;
    if (nl < min_leaf || nr < min_leaf) return true;
    const double score = child_score(left[0], left[1], right[0], right[1]);
    if (score > best.score) best = {f, threshold, score};
    return true;
  }

  const ModelSpec& spec_;
  const Eigen::MatrixXd& x_;
  const std::vector<int>& labels_;
  Rng rng_;
  std::vector<std::size_t> samples_;
  std::vector<int> features_;
  int mtry_ = 1;
  std::vector<std::pair<double, int>> buffer_;
};

std::vector<int> Ensemble::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  const double half = 0.5 * static_cast<double>(trees_.size());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double healthy = 0.0;
    for (const auto& tree : trees_) healthy += tree.predict_healthy(x, r);
    out[static_cast<std::size_t>(r)] = healthy > half ? kHealthy : kBroken;
  }
  return out;
}

double Ensemble::accuracy(const Dataset& d) const {
  if (d.rows() == 0) return 0.0;
  const auto predicted = predict(d.x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == d.labels[i];
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

Ensemble fit_ensemble(const ModelSpec& spec, const Dataset& train, std::uint64_t seed) {
  spec.validate();
  if (!train.labeled() || train.labels.size() != train.rows()) {
    throw Error(ErrorCode::NotBinary, "classification needs one label per row");
  }
  std::size_t per_class[2] = {0, 0};
  for (int label : train.labels) {
    if (label != kBroken && label != kHealthy) {
      throw Error(ErrorCode::NotBinary, "labels must be 0 or 1");
    }
    ++per_class[label];
  }
  if (per_class[0] == 0 || per_class[1] == 0) {
    throw Error(ErrorCode::NotBinary, "training data contains a single class");
  }
  if (per_class[0] < 2 || per_class[1] < 2) {
    throw Error(ErrorCode::TooFewSamples, "each class needs at least two training rows");
  }
  if (train.cols() == 0) throw Error(ErrorCode::TooFewSamples, "no features to split on");

  Ensemble e;
  e.spec_ = spec;
  e.num_features_ = train.cols();
  e.trees_.resize(static_cast<std::size_t>(spec.n_trees));
  parallel_for(
      e.trees_.size(),
      [&](std::size_t t) {
        TreeBuilder builder(spec, train.x, train.labels, derive_seed(seed, t));
        e.trees_[t] = builder.build();
      },
      spec.threads);
  return e;
}

ImportanceSummary feature_importances(const Ensemble& e) {
  const std::size_t p = e.num_features();
  ImportanceSummary s{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  std::vector<const DecisionTree*> split_trees;
  for (const auto& tree : e.trees()) {
    if (tree.nodes().size() > 1) split_trees.push_back(&tree);
  }
  if (split_trees.empty()) return s;
  const double t = static_cast<double>(split_trees.size());
  for (const auto* tree : split_trees) {
    for (std::size_t j = 0; j < p; ++j) s.mean[j] += tree->importances()[j];
  }
  for (double& m : s.mean) m /= t;
  const double total = std::accumulate(s.mean.begin(), s.mean.end(), 0.0);
  if (total > 0.0) {
    for (double& m : s.mean) m /= total;
  }
  if (split_trees.size() > 1) {
    for (std::size_t j = 0; j < p; ++j) {
      double ss = 0.0;
      for (const auto* tree : split_trees) {
        const double d = tree->importances()[j] - s.mean[j];
        ss += d * d;
      }
      s.std_error[j] = std::sqrt(ss / (t - 1.0)) / std::sqrt(t);
    }
  }
  return s;
}

CvResult kfold_cv(const ModelSpec& spec, const Dataset& d, std::size_t k, std::uint64_t seed) {
  if (!d.labeled()) throw Error(ErrorCode::NotBinary, "cross-validation needs labels");
  const auto folds = stratified_folds(d, k, seed);
  CvResult r;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::size_t> train_rows;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) train_rows.insert(train_rows.end(), folds[j].begin(), folds[j].end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    const Dataset train = d.select_rows(train_rows);
    const Dataset test = d.select_rows(folds[i]);
    const Ensemble e = fit_ensemble(spec, train, derive_seed(seed, i + 1));
    r.fold_scores.push_back(e.accuracy(test));
  }
  const double kk = static_cast<double>(k);
  r.mean = std::accumulate(r.fold_scores.begin(), r.fold_scores.end(), 0.0) / kk;
  double ss = 0.0;
  for (double s : r.fold_scores) ss += (s - r.mean) * (s - r.mean);
  r.std = std::sqrt(ss / kk);
  r.std_error = std::sqrt(ss / (kk - 1.0)) / std::sqrt(kk);
  return r;
}

PruneCurve prune_loop(const ModelSpec& spec, const Dataset& d, std::size_t k,
                      std::uint64_t seed) {
  const std::size_t p = d.cols();
  if (p == 0) throw Error(ErrorCode::TooFewSamples, "no features to prune");
  const auto importance = feature_importances(fit_ensemble(spec, d, seed)).mean;

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });

  PruneCurve curve;
  for (std::size_t j : order) {
    curve.ranking.push_back(d.columns.empty() ? std::to_string(j) : d.columns[j]);
    curve.initial_importance.push_back(importance[j]);
  }
  for (std::size_t removed = 0; removed < p; ++removed) {
    std::vector<std::size_t> keep(order.begin(), order.end() - static_cast<long>(removed));
    std::sort(keep.begin(), keep.end());
    PruneStep step;
    step.removed_count = removed;
    if (removed > 0) step.removed_feature = curve.ranking[p - removed];
    step.cv = kfold_cv(spec, d.select_columns(keep), k, seed);
    curve.steps.push_back(std::move(step));
  }
  return curve;
}

}  // namespace archattr::ml
