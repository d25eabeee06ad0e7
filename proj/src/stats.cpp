#include "lookde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lookde {

namespace {

void check_samples(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() < 1 || y.rows() < 1) {
    throw std::invalid_argument("two-sample statistic needs non-empty samples");
  }
  if (x.cols() != y.cols()) {
    throw std::invalid_argument("two-sample statistic: dimension mismatch");
  }
}

Eigen::MatrixXd pairwise_sq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd d2(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      d2(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    }
  }
  return d2;
}

double gaussian_mean(const Eigen::MatrixXd& sq, double inv_two_h2) {
  return (-inv_two_h2 * sq.array()).exp().mean();
}

// Midranks (1-based, ties averaged) of the sample's own sorted values within
// the pooled sorted sequence; used by the rank form of the CvM statistic.
void pooled_midranks(const std::vector<double>& a, const std::vector<double>& b,
                     std::vector<double>& ranks_a, std::vector<double>& ranks_b) {
  struct Tagged {
    double value;
    bool from_a;
  };
  std::vector<Tagged> pooled;
  pooled.reserve(a.size() + b.size());
  for (double v : a) pooled.push_back({v, true});
  for (double v : b) pooled.push_back({v, false});
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const Tagged& l, const Tagged& r) { return l.value < r.value; });

  ranks_a.clear();
  ranks_b.clear();
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].value == pooled[i].value) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of i+1 .. j
    for (std::size_t t = i; t < j; ++t) {
      (pooled[t].from_a ? ranks_a : ranks_b).push_back(midrank);
    }
    i = j;
  }
}

}  // namespace

double median_pairwise_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  check_samples(x, y);
  Eigen::MatrixXd pooled(x.rows() + y.rows(), x.cols());
  pooled << x, y;
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(pooled.rows() * (pooled.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < pooled.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < pooled.rows(); ++j) {
      const double d = (pooled.row(i) - pooled.row(j)).norm();
      if (d > 0.0) dists.push_back(d);
    }
  }
  if (dists.empty()) {
    throw std::invalid_argument(
        "all pooled points coincide; no bandwidth can be inferred (pass a fixed one)");
  }
  std::sort(dists.begin(), dists.end());
  const std::size_t mid = dists.size() / 2;
  if (dists.size() % 2 == 1) return dists[mid];
  return 0.5 * (dists[mid - 1] + dists[mid]);
}

double mmd_statistic(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                     const SampleTest& test) {
  check_samples(x, y);
  if (test.kind != SampleTestKind::Mmd) {
    throw std::invalid_argument("mmd_statistic called with a non-MMD test");
  }
  double h;
  if (test.mmd_bandwidth) {
    h = *test.mmd_bandwidth;
    if (!(h > 0.0)) throw std::invalid_argument("MMD bandwidth must be positive");
  } else {
    h = median_pairwise_distance(x, y);
  }
  const double inv_two_h2 = 0.5 / (h * h);
  const double v = gaussian_mean(pairwise_sq(x, x), inv_two_h2) +
                   gaussian_mean(pairwise_sq(y, y), inv_two_h2) -
                   2.0 * gaussian_mean(pairwise_sq(x, y), inv_two_h2);
  return std::max(v, 0.0);
}

double energy_statistic(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  check_samples(x, y);
  const double cross = pairwise_sq(x, y).array().sqrt().mean();
  const double within_x = pairwise_sq(x, x).array().sqrt().mean();
  const double within_y = pairwise_sq(y, y).array().sqrt().mean();
  return std::max(2.0 * cross - within_x - within_y, 0.0);
}

double sample_test_statistic(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             const SampleTest& test) {
  return test.kind == SampleTestKind::Mmd ? mmd_statistic(x, y, test)
                                          : energy_statistic(x, y);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("KS statistic needs non-empty samples");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0;
  std::size_t ib = 0;
  double sup = 0.0;
  while (ia < a.size() || ib < b.size()) {
    double v;
    if (ia == a.size()) {
      v = b[ib];
    } else if (ib == b.size()) {
      v = a[ia];
    } else {
      v = std::min(a[ia], b[ib]);
    }
    while (ia < a.size() && a[ia] == v) ++ia;
    while (ib < b.size() && b[ib] == v) ++ib;
    sup = std::max(sup, std::abs(static_cast<double>(ia) / na -
                                 static_cast<double>(ib) / nb));
  }
  return sup;
}

double cvm_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("CvM statistic needs non-empty samples");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> ranks_a;
  std::vector<double> ranks_b;
  pooled_midranks(a, b, ranks_a, ranks_b);

  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  double sum_a = 0.0;
  for (std::size_t i = 0; i < ranks_a.size(); ++i) {
    const double diff = ranks_a[i] - static_cast<double>(i + 1);
    sum_a += diff * diff;
  }
  double sum_b = 0.0;
  for (std::size_t j = 0; j < ranks_b.size(); ++j) {
    const double diff = ranks_b[j] - static_cast<double>(j + 1);
    sum_b += diff * diff;
  }
  const double u = n * sum_a + m * sum_b;
  const double t = u / (n * m * (n + m)) - (4.0 * n * m - 1.0) / (6.0 * (n + m));
  return std::max(t, 0.0);
}

double mean_diff(const std::vector<double>& model_scores,
                 const std::vector<double>& base_scores) {
  if (model_scores.empty() || base_scores.empty()) {
    throw std::invalid_argument("mean difference needs non-empty score lists");
  }
  const double model_mean =
      std::accumulate(model_scores.begin(), model_scores.end(), 0.0) /
      static_cast<double>(model_scores.size());
  const double base_mean = std::accumulate(base_scores.begin(), base_scores.end(), 0.0) /
                           static_cast<double>(base_scores.size());
  return model_mean - base_mean;
}

}  // namespace lookde
