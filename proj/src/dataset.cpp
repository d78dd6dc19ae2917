#include "archattr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "archattr/error.hpp"
#include "archattr/rng.hpp"

namespace archattr::ml {
namespace {

std::vector<std::size_t> rows_with_label(const Dataset& d, int label) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    if (d.labels[i] == label) out.push_back(i);
  }
  return out;
}

}  // namespace

void Dataset::validate() const {
  if (!columns.empty() && columns.size() != cols()) {
    throw Error(ErrorCode::Config, "column names do not match the design matrix");
  }
  if (!target.empty() && target.size() != rows()) {
    throw Error(ErrorCode::Config, "target length does not match row count");
  }
  if (!labels.empty() && labels.size() != rows()) {
    throw Error(ErrorCode::Config, "label count does not match row count");
  }
  if (!row_ids.empty() && row_ids.size() != rows()) {
    throw Error(ErrorCode::Config, "row id count does not match row count");
  }
  if (!x.allFinite()) throw Error(ErrorCode::NumericalFailure, "design matrix has non-finite entries");
  for (double t : target) {
    if (!std::isfinite(t)) throw Error(ErrorCode::NumericalFailure, "target has non-finite entries");
  }
  std::set<std::string> unique(columns.begin(), columns.end());
  if (unique.size() != columns.size()) {
    throw Error(ErrorCode::Config, "column names must be unique");
  }
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.columns = columns;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
    if (!target.empty()) out.target.push_back(target[rows[r]]);
    if (!labels.empty()) out.labels.push_back(labels[rows[r]]);
    if (!row_ids.empty()) out.row_ids.push_back(row_ids[rows[r]]);
  }
  return out;
}

Dataset Dataset::select_columns(std::span<const std::size_t> cols) const {
  Dataset out;
  out.target = target;
  out.labels = labels;
  out.row_ids = row_ids;
  out.x.resize(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.x.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(cols[c]));
    if (!columns.empty()) out.columns.push_back(columns[cols[c]]);
  }
  return out;
}

Dataset dataset_from_table(const AttributeTable& table) {
  Dataset d;
  d.columns.assign(kAttributeNames.begin(), kAttributeNames.end());
  d.x.resize(static_cast<Eigen::Index>(table.rows.size()), kNumAttributes);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const AttributeVector& row = table.rows[r];
    if (!row.accuracy) {
      throw Error(ErrorCode::Config, "row '" + row.network_id + "' has no accuracy");
    }
    for (std::size_t c = 0; c < kNumAttributes; ++c) {
      d.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.values[c];
    }
    d.target.push_back(*row.accuracy);
    d.row_ids.push_back(row.network_id);
  }
  d.validate();
  return d;
}

std::size_t count_label(const Dataset& d, int label) {
  return static_cast<std::size_t>(std::count(d.labels.begin(), d.labels.end(), label));
}

Dataset balance_classes(const Dataset& d, double threshold, std::uint64_t seed) {
  if (d.target.size() != d.rows()) {
    throw Error(ErrorCode::Config, "balancing needs a continuous accuracy target");
  }
  Dataset labeled = d;
  labeled.labels.resize(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    labeled.labels[i] = d.target[i] > threshold ? kHealthy : kBroken;
  }
  auto healthy = rows_with_label(labeled, kHealthy);
  auto broken = rows_with_label(labeled, kBroken);
  if (healthy.empty() || broken.empty()) {
    throw Error(ErrorCode::DegenerateSplit,
                "threshold " + std::to_string(threshold) + " leaves " +
                    std::to_string(healthy.size()) + " healthy and " +
                    std::to_string(broken.size()) + " broken rows");
  }
  auto& majority = healthy.size() > broken.size() ? healthy : broken;
  const std::size_t keep = std::min(healthy.size(), broken.size());
  Rng rng(seed);
  rng.shuffle(std::span(majority));
  majority.resize(keep);

  std::vector<std::size_t> rows;
  rows.reserve(2 * keep);
  rows.insert(rows.end(), healthy.begin(), healthy.end());
  rows.insert(rows.end(), broken.begin(), broken.end());
  std::sort(rows.begin(), rows.end());
  return labeled.select_rows(rows);
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed) {
  if (d.rows() < 5) {
    throw Error(ErrorCode::TooFewSamples, "train/test split needs at least 5 rows");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::Config, "test fraction must lie in (0, 1)");
  }
  std::vector<std::vector<std::size_t>> strata;
  if (d.labeled()) {
    strata = {rows_with_label(d, kBroken), rows_with_label(d, kHealthy)};
  } else {
    strata.emplace_back(d.rows());
    for (std::size_t i = 0; i < d.rows(); ++i) strata[0][i] = i;
  }

  Rng rng(seed);
  std::vector<std::size_t> train, test;
  for (auto& stratum : strata) {
    rng.shuffle(std::span(stratum));
    const auto n_test = static_cast<std::size_t>(
        std::floor(test_fraction * static_cast<double>(stratum.size()) + 0.5));
    test.insert(test.end(), stratum.begin(), stratum.begin() + static_cast<long>(n_test));
    train.insert(train.end(), stratum.begin() + static_cast<long>(n_test), stratum.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {d.select_rows(train), d.select_rows(test)};
}

std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& d, std::size_t k,
                                                       std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::Config, "cross-validation needs k >= 2");
  if (d.rows() < k) {
    throw Error(ErrorCode::TooFewSamples, "cross-validation needs at least k rows");
  }
  Rng rng(seed);
  std::vector<std::size_t> order;
  if (d.labeled()) {
    for (int label : {kBroken, kHealthy}) {
      auto rows = rows_with_label(d, label);
      rng.shuffle(std::span(rows));
      order.insert(order.end(), rows.begin(), rows.end());
    }
  } else {
    order.resize(d.rows());
    for (std::size_t i = 0; i < d.rows(); ++i) order[i] = i;
    rng.shuffle(std::span(order));
  }
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < order.size(); ++i) folds[i % k].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

}  // namespace archattr::ml
