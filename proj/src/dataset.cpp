#include "lookde/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "lookde/rng.hpp"

namespace lookde {

namespace {

bool rows_equal(const Eigen::MatrixXd& m, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (m(a, c) != m(b, c)) return false;
  }
  return true;
}

bool row_less(const Eigen::MatrixXd& m, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (m(a, c) < m(b, c)) return true;
    if (m(a, c) > m(b, c)) return false;
  }
  return false;
}

bool detect_duplicate_rows(const Eigen::MatrixXd& m) {
  if (m.rows() < 2) return false;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&m](Eigen::Index a, Eigen::Index b) { return row_less(m, a, b); });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (rows_equal(m, order[i - 1], order[i])) return true;
  }
  return false;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && !cell.empty();
}

bool skippable(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace

Dataset::Dataset(Eigen::MatrixXd values, std::vector<std::string> feature_names)
    : values_(std::move(values)), feature_names_(std::move(feature_names)) {
  if (static_cast<Eigen::Index>(feature_names_.size()) != values_.cols()) {
    throw std::invalid_argument("feature name count does not match column count");
  }
  if (!values_.allFinite()) {
    throw std::invalid_argument("dataset contains non-finite values");
  }
  has_duplicates_ = detect_duplicate_rows(values_);
}

namespace {

Dataset load_csv_impl(const std::string& path, bool has_header, bool sniff) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  std::string line;
  long line_no = 0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  bool saw_content = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const std::vector<std::string> cells = split_cells(line);

    if (!saw_content) {
      saw_content = true;
      width = cells.size();
      bool header_row = has_header;
      if (sniff) {
        header_row = false;
        for (const std::string& c : cells) {
          double v;
          if (!parse_double(c, v) || !std::isfinite(v)) {
            header_row = true;
            break;
          }
        }
      }
      if (header_row) {
        names = cells;
        continue;
      }
      names.reserve(width);
      for (std::size_t j = 0; j < width; ++j) names.push_back("col" + std::to_string(j));
    }

    if (cells.size() != width) {
      throw std::runtime_error("ragged row at line " + std::to_string(line_no) + " of " +
                               path + ": expected " + std::to_string(width) +
                               " columns, got " + std::to_string(cells.size()));
    }
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j) {
      double v;
      if (!parse_double(cells[j], v)) {
        throw std::runtime_error("non-numeric cell at row " + std::to_string(rows.size() + 1) +
                                 ", column " + std::to_string(j + 1) + " of " + path +
                                 " (line " + std::to_string(line_no) + "): '" + cells[j] + "'");
      }
      if (!std::isfinite(v)) {
        throw std::runtime_error("non-finite value at row " + std::to_string(rows.size() + 1) +
                                 ", column " + std::to_string(j + 1) + " of " + path);
      }
      row[j] = v;
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw std::runtime_error("no data rows in " + path);

  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return Dataset(std::move(values), std::move(names));
}

}  // namespace

Dataset load_csv(const std::string& path, bool has_header) {
  return load_csv_impl(path, has_header, false);
}

Dataset load_csv_auto(const std::string& path) { return load_csv_impl(path, false, true); }

void write_csv(const Dataset& data, const std::string& path,
               const std::string& provenance_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  if (!provenance_comment.empty()) out << "# " << provenance_comment << "\n";
  for (std::size_t j = 0; j < data.feature_names().size(); ++j) {
    const std::string& name = data.feature_names()[j];
    if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos) {
      throw std::runtime_error("feature name not representable in CSV: " + name);
    }
    out << (j ? "," : "") << name;
  }
  out << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
    for (Eigen::Index j = 0; j < data.n_dims(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.values()(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

NormStats zscore_fit(const Dataset& data) {
  const Eigen::MatrixXd& x = data.values();
  if (x.rows() < 2) throw std::invalid_argument("z-score fit needs at least 2 rows");
  NormStats stats;
  stats.means = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - stats.means.transpose();
  stats.std_devs =
      (centered.array().square().colwise().sum() / static_cast<double>(x.rows() - 1))
          .sqrt()
          .transpose();
  for (Eigen::Index j = 0; j < stats.std_devs.size(); ++j) {
    if (!(stats.std_devs[j] > 0.0)) {
      throw std::invalid_argument("zero variance feature: " + data.feature_names()[j]);
    }
  }
  return stats;
}

NormStats identity_stats(Eigen::Index dims) {
  return NormStats{Eigen::VectorXd::Zero(dims), Eigen::VectorXd::Ones(dims)};
}

Eigen::MatrixXd zscore_apply(const Eigen::MatrixXd& values, const NormStats& stats) {
  if (values.cols() != stats.means.size()) {
    throw std::invalid_argument("z-score stats dimension mismatch");
  }
  Eigen::MatrixXd out = values.rowwise() - stats.means.transpose();
  out.array().rowwise() /= stats.std_devs.transpose().array();
  return out;
}

Eigen::MatrixXd zscore_invert(const Eigen::MatrixXd& values, const NormStats& stats) {
  if (values.cols() != stats.means.size()) {
    throw std::invalid_argument("z-score stats dimension mismatch");
  }
  Eigen::MatrixXd out = values;
  out.array().rowwise() *= stats.std_devs.transpose().array();
  out.rowwise() += stats.means.transpose();
  return out;
}

Dataset zscore_apply(const Dataset& data, const NormStats& stats) {
  return Dataset(zscore_apply(data.values(), stats), data.feature_names());
}

Dataset zscore_invert(const Dataset& data, const NormStats& stats) {
  return Dataset(zscore_invert(data.values(), stats), data.feature_names());
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, const SplitSpec& spec) {
  const Eigen::Index n = data.n_rows();
  if (n < 2) throw std::invalid_argument("split needs at least 2 rows");
  if (!(spec.train_fraction > 0.0) || !(spec.train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie strictly between 0 and 1");
  }
  const auto n_train =
      static_cast<Eigen::Index>(std::floor(spec.train_fraction * static_cast<double>(n)));
  const Eigen::Index n_test = n - n_train;
  if (n_train < 1 || n_test < 1) {
    throw std::invalid_argument("degenerate split: train gets " + std::to_string(n_train) +
                                " rows and test gets " + std::to_string(n_test));
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(derive_seed(spec.seed, "train-test-split"));
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  Eigen::MatrixXd train(n_train, data.n_dims());
  Eigen::MatrixXd test(n_test, data.n_dims());
  for (Eigen::Index i = 0; i < n_train; ++i) {
    train.row(i) = data.values().row(order[static_cast<std::size_t>(i)]);
  }
  for (Eigen::Index i = 0; i < n_test; ++i) {
    test.row(i) = data.values().row(order[static_cast<std::size_t>(n_train + i)]);
  }
  return {Dataset(std::move(train), data.feature_names()),
          Dataset(std::move(test), data.feature_names())};
}

MinPairwiseDistance min_pairwise_distance(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw std::invalid_argument("minimum pairwise distance needs at least 2 points");
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (points.row(i) - points.row(j)).squaredNorm();
      if (d2 < best) best = d2;
    }
  }
  const double value = std::sqrt(best);
  return MinPairwiseDistance{value, value == 0.0};
}

MinPairwiseDistance min_pairwise_distance(const Dataset& data) {
  return min_pairwise_distance(data.values());
}

Dataset drop_columns(const Dataset& data, const std::vector<std::string>& names) {
  if (names.empty()) return data;
  std::vector<bool> drop(data.feature_names().size(), false);
  for (const std::string& name : names) {
    const auto it =
        std::find(data.feature_names().begin(), data.feature_names().end(), name);
    if (it == data.feature_names().end()) {
      throw std::invalid_argument("unknown column: " + name);
    }
    drop[static_cast<std::size_t>(it - data.feature_names().begin())] = true;
  }
  std::vector<std::string> kept_names;
  std::vector<Eigen::Index> kept_cols;
  for (std::size_t j = 0; j < drop.size(); ++j) {
    if (!drop[j]) {
      kept_names.push_back(data.feature_names()[j]);
      kept_cols.push_back(static_cast<Eigen::Index>(j));
    }
  }
  if (kept_cols.empty()) throw std::invalid_argument("cannot drop every column");
  Eigen::MatrixXd values(data.n_rows(), static_cast<Eigen::Index>(kept_cols.size()));
  for (std::size_t j = 0; j < kept_cols.size(); ++j) {
    values.col(static_cast<Eigen::Index>(j)) = data.values().col(kept_cols[j]);
  }
  return Dataset(std::move(values), std::move(kept_names));
}

Eigen::Index row_overlap_count(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("row overlap: column count mismatch");
  auto row_key = [](const Eigen::MatrixXd& m, Eigen::Index i) {
    std::string key(static_cast<std::size_t>(m.cols()) * sizeof(double), '\0');
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(i, c);
      std::memcpy(key.data() + static_cast<std::size_t>(c) * sizeof(double), &v,
                  sizeof(double));
    }
    return key;
  };
  std::unordered_set<std::string> seen;
  for (Eigen::Index i = 0; i < b.rows(); ++i) seen.insert(row_key(b, i));
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (seen.count(row_key(a, i))) ++count;
  }
  return count;
}

}  // namespace lookde
