// Independent reference implementations used to cross-check the library.
// Everything here is written the slow, obvious way on purpose: direct loops,
// textbook formulas, no shared code with src/.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// ---- densities ----

inline double gaussian_log_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                               double sigma) {
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * kPi) - d * std::log(sigma) -
         (x - mu).squaredNorm() / (2.0 * sigma * sigma);
}

// Mixture log density via direct summation in linear space (fine for the
// well-scaled fixtures these tests use).
inline double mixture_log_pdf(const Eigen::VectorXd& x, const Eigen::MatrixXd& centers,
                              const Eigen::VectorXd& sigmas, const Eigen::VectorXd& weights) {
  double p = 0.0;
  for (Eigen::Index j = 0; j < centers.rows(); ++j) {
    p += weights[j] * std::exp(gaussian_log_pdf(x, centers.row(j).transpose(), sigmas[j]));
  }
  return std::log(p);
}

// Unweighted leave-one-out objective, straight from its definition.
inline double loo_unweighted(const Eigen::MatrixXd& centers, const Eigen::VectorXd& sigmas) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < centers.rows(); ++i) {
    double p = 0.0;
    for (Eigen::Index j = 0; j < centers.rows(); ++j) {
      if (j == i) continue;
      p += std::exp(gaussian_log_pdf(centers.row(i).transpose(), centers.row(j).transpose(),
                                     sigmas[j]));
    }
    total += std::log(p);
  }
  return total;
}

inline double loo_weighted(const Eigen::MatrixXd& centers, const Eigen::VectorXd& sigmas,
                           const Eigen::VectorXd& weights) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < centers.rows(); ++i) {
    double p = 0.0;
    for (Eigen::Index j = 0; j < centers.rows(); ++j) {
      if (j == i) continue;
      p += weights[j] * std::exp(gaussian_log_pdf(centers.row(i).transpose(),
                                                  centers.row(j).transpose(), sigmas[j]));
    }
    total += std::log(p);
  }
  return total;
}

// ---- derivatives and integrals ----

// Central finite difference of a scalar function of one coordinate.
inline double central_difference(const std::function<double(double)>& f, double x,
                                 double step) {
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

// Composite Simpson rule; n_intervals must be even.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int n_intervals) {
  const double h = (b - a) / n_intervals;
  double acc = f(a) + f(b);
  for (int i = 1; i < n_intervals; ++i) {
    acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

// ---- distances and two-sample statistics ----

inline double min_distance(const Eigen::MatrixXd& points) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.rows(); ++j) {
      if (i == j) continue;
      best = std::min(best, (points.row(i) - points.row(j)).norm());
    }
  }
  return best;
}

inline double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Pooled median heuristic and the biased MMD estimate, all in direct loops.
inline double mmd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double bandwidth = 0.0) {
  if (bandwidth <= 0.0) {
    std::vector<double> dists;
    Eigen::MatrixXd pooled(x.rows() + y.rows(), x.cols());
    pooled << x, y;
    for (Eigen::Index i = 0; i < pooled.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < pooled.rows(); ++j) {
        const double d = (pooled.row(i) - pooled.row(j)).norm();
        if (d > 0.0) dists.push_back(d);
      }
    }
    bandwidth = median_of(std::move(dists));
  }
  auto kernel_mean = [bandwidth](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < b.rows(); ++j) {
        acc += std::exp(-(a.row(i) - b.row(j)).squaredNorm() / (2.0 * bandwidth * bandwidth));
      }
    }
    return acc / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
  };
  return kernel_mean(x, x) + kernel_mean(y, y) - 2.0 * kernel_mean(x, y);
}

inline double energy(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  auto distance_mean = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < b.rows(); ++j) {
        acc += (a.row(i) - b.row(j)).norm();
      }
    }
    return acc / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
  };
  return 2.0 * distance_mean(x, y) - distance_mean(x, x) - distance_mean(y, y);
}

inline double ecdf_at(const std::vector<double>& sorted, double t) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

inline double ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double sup = 0.0;
  for (double t : a) sup = std::max(sup, std::abs(ecdf_at(a, t) - ecdf_at(b, t)));
  for (double t : b) sup = std::max(sup, std::abs(ecdf_at(a, t) - ecdf_at(b, t)));
  return sup;
}

// CvM in the ECDF-integral form
//   T = n*m/(n+m)^2 * sum over pooled points of (F_a - F_b)^2,
// which matches the rank form exactly when there are no ties.
inline double cvm_integral(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  double acc = 0.0;
  for (double t : pooled) {
    const double diff = ecdf_at(a, t) - ecdf_at(b, t);
    acc += diff * diff;
  }
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  return n * m / ((n + m) * (n + m)) * acc;
}

// ---- parameter-count matching ----

// Exhaustive scan over component counts, no closed form.
inline Eigen::Index matched_components_scan(Eigen::Index n, Eigen::Index d,
                                            bool weighted_target, Eigen::Index k_max) {
  const auto per = static_cast<double>(d + d * (d + 1) / 2 + 1);
  const double target = weighted_target ? static_cast<double>(2 * n - 1)
                                        : static_cast<double>(n);
  Eigen::Index best = 1;
  double best_diff = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 1; k <= k_max; ++k) {
    const double diff = std::abs(static_cast<double>(k) * per - 1.0 - target);
    if (diff < best_diff) {
      best_diff = diff;
      best = k;
    }
  }
  return best;
}

// ---- fixture data ----

// Deterministic test data with guaranteed-distinct rows. Uses std::mt19937
// (test-only, never compared against library streams).
inline Eigen::MatrixXd random_points(Eigen::Index n, Eigen::Index d, std::uint32_t seed,
                                     double scale = 1.0) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = normal(gen);
  }
  return out;
}

inline Eigen::VectorXd random_sigmas(Eigen::Index n, std::uint32_t seed, double lo = 0.2,
                                     double hi = 2.0) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> uniform(lo, hi);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = uniform(gen);
  return out;
}

inline Eigen::VectorXd random_simplex(Eigen::Index n, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> uniform(0.05, 1.0);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = uniform(gen);
  out /= out.sum();
  return out;
}

}  // namespace oracle
