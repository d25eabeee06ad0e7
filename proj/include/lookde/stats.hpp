#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace lookde {

enum class SampleTestKind { Mmd, Energy };

// A two-sample discrepancy on point sets. MMD uses a Gaussian kernel whose
// bandwidth is either fixed or picked by the median heuristic on the pooled
// pairwise distances (zeros excluded).
struct SampleTest {
  SampleTestKind kind = SampleTestKind::Mmd;
  std::optional<double> mmd_bandwidth;

  static SampleTest mmd() { return {SampleTestKind::Mmd, std::nullopt}; }
  static SampleTest mmd_fixed(double bandwidth) { return {SampleTestKind::Mmd, bandwidth}; }
  static SampleTest energy() { return {SampleTestKind::Energy, std::nullopt}; }

  std::string name() const { return kind == SampleTestKind::Mmd ? "mmd" : "energy"; }
};

// Median of the nonzero pairwise Euclidean distances of the pooled rows, with
// the even-count median taken as the average of the two middle values.
double median_pairwise_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// Biased (V-statistic) squared MMD with kernel exp(-|a-b|^2 / (2h^2));
// non-negative up to rounding and clamped at zero.
double mmd_statistic(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                     const SampleTest& test);

// Energy distance V-statistic 2*E|X-Y| - E|X-X'| - E|Y-Y'|, clamped at zero.
double energy_statistic(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

double sample_test_statistic(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             const SampleTest& test);

// Kolmogorov-Smirnov two-sample statistic: sup |F_a - F_b| over the merged
// support, with right-continuous empirical distribution functions.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Cramer-von Mises two-sample statistic in the rank form
//   T = U / (n*m*(n+m)) - (4*n*m - 1) / (6*(n+m)),
// U = n * sum_i (r_i - i)^2 + m * sum_j (s_j - j)^2, with midranks for ties.
// Identical samples give the tie-case minimum, which is clamped to zero.
double cvm_two_sample(std::vector<double> a, std::vector<double> b);

// mean(model_scores) - mean(base_scores); signed, larger means worse fit when
// the scores are discrepancy statistics.
double mean_diff(const std::vector<double>& model_scores,
                 const std::vector<double>& base_scores);

}  // namespace lookde
