#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "archattr/attribute_table.hpp"

namespace archattr::ml {

inline constexpr int kBroken = 0;
inline constexpr int kHealthy = 1;

// Rows are networks, columns named features. `target` holds the continuous
// accuracy; `labels` is filled once the rows are classified.
struct Dataset {
  Eigen::MatrixXd x;
  std::vector<double> target;
  std::vector<int> labels;
  std::vector<std::string> columns;
  std::vector<std::string> row_ids;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(x.cols()); }
  bool labeled() const noexcept { return !labels.empty(); }

  // Throws archattr::Error on non-finite entries or inconsistent sizes.
  void validate() const;

  Dataset select_rows(std::span<const std::size_t> rows) const;
  Dataset select_columns(std::span<const std::size_t> cols) const;
};

// All 30 attributes as columns; every row must carry an accuracy.
Dataset dataset_from_table(const AttributeTable& table);

std::size_t count_label(const Dataset& d, int label);

// healthy iff accuracy > threshold; the majority class is undersampled
// without replacement to the size of the minority class. Kept rows retain
// their original order. Throws DegenerateSplit if a class is empty.
Dataset balance_classes(const Dataset& d, double threshold, std::uint64_t seed);

// Seeded shuffle split, stratified by label when labels are present.
std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed);

// Stratified fold assignment: each class is shuffled, the classes are
// concatenated and rows are dealt round-robin, so no fold is empty when
// rows >= k. Returns the row indices of each fold, sorted.
std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& d, std::size_t k,
                                                       std::uint64_t seed);

}  // namespace archattr::ml
