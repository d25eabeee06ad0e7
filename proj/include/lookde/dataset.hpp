#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lookde {

// Numeric sample matrix, one row per data point, with per-column names.
// Construction validates that every entry is finite and precomputes whether
// any two rows are exactly equal (leave-one-out training must reject those).
class Dataset {
 public:
  Dataset() = default;
  Dataset(Eigen::MatrixXd values, std::vector<std::string> feature_names);

  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  Eigen::Index n_rows() const { return values_.rows(); }
  Eigen::Index n_dims() const { return values_.cols(); }
  bool has_duplicate_rows() const { return has_duplicates_; }

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> feature_names_;
  bool has_duplicates_ = false;
};

// Per-feature location/scale of a z-score transform. All std_devs are > 0.
struct NormStats {
  Eigen::VectorXd means;
  Eigen::VectorXd std_devs;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct MinPairwiseDistance {
  double value = 0.0;
  bool has_repeats = false;  // value == 0, i.e. at least one repeated point
};

// CSV I/O. Cells are comma-separated decimal numbers; blank lines and lines
// starting with '#' (provenance comments) are skipped. Errors identify the
// offending line, row and column.
Dataset load_csv(const std::string& path, bool has_header);
// Sniffs the header: if every cell of the first content line parses as a
// finite number the file is treated as headerless and columns are named
// col0, col1, ...
Dataset load_csv_auto(const std::string& path);
void write_csv(const Dataset& data, const std::string& path,
               const std::string& provenance_comment = "");

// Sample mean and sample standard deviation (n-1 divisor) per column.
// Throws if any column has zero variance, naming the feature.
NormStats zscore_fit(const Dataset& data);
Eigen::MatrixXd zscore_apply(const Eigen::MatrixXd& values, const NormStats& stats);
Eigen::MatrixXd zscore_invert(const Eigen::MatrixXd& values, const NormStats& stats);
Dataset zscore_apply(const Dataset& data, const NormStats& stats);
Dataset zscore_invert(const Dataset& data, const NormStats& stats);

// Identity transform (means 0, std devs 1), used when normalization is off.
NormStats identity_stats(Eigen::Index dims);

// Seeded shuffle split; train gets floor(train_fraction * n) rows. Throws if
// either side would be empty.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, const SplitSpec& spec);

// Exact minimum Euclidean distance over all point pairs (direct O(n^2) scan,
// no Gram-matrix shortcut, so tiny distances are not lost to cancellation).
MinPairwiseDistance min_pairwise_distance(const Eigen::MatrixXd& points);
MinPairwiseDistance min_pairwise_distance(const Dataset& data);

// Removes the named columns; throws on unknown names.
Dataset drop_columns(const Dataset& data, const std::vector<std::string>& names);

// Number of rows of `a` that also appear (exactly) in `b`.
Eigen::Index row_overlap_count(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace lookde
