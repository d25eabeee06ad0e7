#include "lookde/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lookde/rng.hpp"

namespace lookde {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// f_ij = log N(x_i; c_j, sigma_j^2 I), built from a squared-distance matrix.
Eigen::MatrixXd log_kernel_matrix(const Eigen::MatrixXd& sqdist,
                                  const Eigen::VectorXd& bandwidths, Eigen::Index dims) {
  const double d = static_cast<double>(dims);
  const Eigen::ArrayXd log_sigma = bandwidths.array().log();
  const Eigen::ArrayXd inv_two_var = 0.5 / bandwidths.array().square();
  Eigen::MatrixXd f =
      (-(sqdist.array().rowwise() * inv_two_var.transpose())).matrix();
  f.array().rowwise() += (-d * log_sigma - 0.5 * d * kLogTwoPi).transpose();
  return f;
}

// Row-wise log-sum-exp; -inf entries drop out (exp underflows to zero).
Eigen::VectorXd logsumexp_rows(const Eigen::MatrixXd& f) {
  Eigen::VectorXd out(f.rows());
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const double m = f.row(i).maxCoeff();
    if (m == kNegInf) {
      out[i] = kNegInf;
      continue;
    }
    out[i] = m + std::log((f.row(i).array() - m).exp().sum());
  }
  return out;
}

void check_eval_dims(const KernelDensityModel& model, Eigen::Index cols) {
  if (cols != model.n_dims()) {
    throw std::invalid_argument("evaluation points have " + std::to_string(cols) +
                                " dimensions but the model has " +
                                std::to_string(model.n_dims()));
  }
}

void check_sqdist(const KernelDensityModel& model, const Eigen::MatrixXd& sqdist) {
  if (sqdist.rows() != model.n_kernels() || sqdist.cols() != model.n_kernels()) {
    throw std::invalid_argument("cached squared-distance matrix has the wrong shape");
  }
}

}  // namespace

KernelDensityModel::KernelDensityModel(Eigen::MatrixXd centers, Eigen::VectorXd bandwidths,
                                       Eigen::VectorXd weights, bool uniform)
    : centers_(std::move(centers)),
      bandwidths_(std::move(bandwidths)),
      weights_(std::move(weights)),
      uniform_weights_(uniform) {
  validate();
}

KernelDensityModel KernelDensityModel::a_kde(Eigen::MatrixXd centers,
                                             Eigen::VectorXd bandwidths) {
  const Eigen::Index n = centers.rows();
  if (n < 1) throw std::invalid_argument("model needs at least one center");
  Eigen::VectorXd weights =
      Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return KernelDensityModel(std::move(centers), std::move(bandwidths), std::move(weights),
                            true);
}

KernelDensityModel KernelDensityModel::pi_kde(Eigen::MatrixXd centers,
                                              Eigen::VectorXd bandwidths,
                                              Eigen::VectorXd weights) {
  return KernelDensityModel(std::move(centers), std::move(bandwidths), std::move(weights),
                            false);
}

void KernelDensityModel::validate() const {
  const Eigen::Index n = centers_.rows();
  if (n < 1) throw std::invalid_argument("model needs at least one center");
  if (centers_.cols() < 1) throw std::invalid_argument("model needs at least one dimension");
  if (!centers_.allFinite()) throw std::invalid_argument("non-finite center");
  if (bandwidths_.size() != n) {
    throw std::invalid_argument("bandwidth count does not match center count");
  }
  if (weights_.size() != n) {
    throw std::invalid_argument("weight count does not match center count");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!std::isfinite(bandwidths_[j]) || !(bandwidths_[j] > 0.0)) {
      throw std::invalid_argument("bandwidths must be positive and finite");
    }
    if (!std::isfinite(weights_[j]) || !(weights_[j] > 0.0)) {
      throw std::invalid_argument("mixture weights must be positive and finite");
    }
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights must sum to 1");
  }
  if (uniform_weights_) {
    const double u = 1.0 / static_cast<double>(n);
    if ((weights_.array() - u).abs().maxCoeff() > 1e-15) {
      throw std::invalid_argument("unweighted model requires uniform 1/n weights");
    }
  }
}

KernelDensityModel KernelDensityModel::with_bandwidth(Eigen::Index j, double sigma) const {
  if (j < 0 || j >= n_kernels()) throw std::invalid_argument("component index out of range");
  Eigen::VectorXd bw = bandwidths_;
  bw[j] = sigma;
  return KernelDensityModel(centers_, std::move(bw), weights_, uniform_weights_);
}

Eigen::MatrixXd squared_distance_matrix(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (points.row(i) - points.row(j)).squaredNorm();
      d2(i, j) = v;
      d2(j, i) = v;
    }
  }
  return d2;
}

Eigen::MatrixXd cross_squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("cross distances: dimension mismatch");
  }
  Eigen::MatrixXd d2(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      d2(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    }
  }
  return d2;
}

Eigen::VectorXd log_density(const KernelDensityModel& model, const Eigen::MatrixXd& points) {
  check_eval_dims(model, points.cols());
  if (points.rows() == 0) return Eigen::VectorXd(0);
  Eigen::MatrixXd f = log_kernel_matrix(cross_squared_distances(points, model.centers()),
                                        model.bandwidths(), model.n_dims());
  f.array().rowwise() += model.weights().array().log().transpose();
  return logsumexp_rows(f);
}

double log_density(const KernelDensityModel& model, const Eigen::VectorXd& x) {
  return log_density(model, Eigen::MatrixXd(x.transpose()))[0];
}

ObjectiveValue total_mll(const KernelDensityModel& model, const Eigen::MatrixXd& points) {
  if (points.rows() == 0) return {0.0, ObjectiveKind::TotalMll};
  return {log_density(model, points).sum(), ObjectiveKind::TotalMll};
}

ObjectiveValue loo_mll(const KernelDensityModel& model, const Eigen::MatrixXd& sqdist) {
  check_sqdist(model, sqdist);
  const Eigen::Index n = model.n_kernels();
  if (n < 2) throw std::invalid_argument("leave-one-out objective needs at least 2 centers");
  Eigen::MatrixXd f = log_kernel_matrix(sqdist, model.bandwidths(), model.n_dims());
  if (!model.uniform_weights()) {
    f.array().rowwise() += model.weights().array().log().transpose();
  }
  f.diagonal().setConstant(kNegInf);
  return {logsumexp_rows(f).sum(), ObjectiveKind::LooMll};
}

ObjectiveValue loo_mll(const KernelDensityModel& model) {
  return loo_mll(model, squared_distance_matrix(model.centers()));
}

double loo_weight_offset(Eigen::Index n) {
  return static_cast<double>(n) * std::log(static_cast<double>(n));
}

Eigen::VectorXd loo_gradient(const KernelDensityModel& model, const Eigen::MatrixXd& sqdist) {
  check_sqdist(model, sqdist);
  const Eigen::Index n = model.n_kernels();
  if (n < 2) throw std::invalid_argument("leave-one-out gradient needs at least 2 centers");
  const double d = static_cast<double>(model.n_dims());

  // Softmax responsibilities over the held-out mixture. Weights always enter;
  // for the uniform model they cancel, so both kinds share this code path.
  Eigen::MatrixXd f = log_kernel_matrix(sqdist, model.bandwidths(), model.n_dims());
  f.array().rowwise() += model.weights().array().log().transpose();
  f.diagonal().setConstant(kNegInf);
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = f.row(i).maxCoeff();
    w.row(i) = (f.row(i).array() - m).exp();
    w.row(i) /= w.row(i).sum();
  }

  const Eigen::ArrayXd sigma = model.bandwidths().array();
  const Eigen::ArrayXd col_w = w.colwise().sum().transpose().array();
  const Eigen::ArrayXd col_dw = sqdist.cwiseProduct(w).colwise().sum().transpose().array();
  return (col_dw / sigma.cube() - d * col_w / sigma).matrix();
}

Eigen::VectorXd loo_gradient(const KernelDensityModel& model) {
  return loo_gradient(model, squared_distance_matrix(model.centers()));
}

double loo_upper_bound(const Eigen::MatrixXd& points) {
  const MinPairwiseDistance min_dist = min_pairwise_distance(points);
  if (min_dist.has_repeats) {
    throw std::invalid_argument(
        "repeated data points: the leave-one-out upper bound is infinite; deduplicate the "
        "input first");
  }
  const double n = static_cast<double>(points.rows());
  const double d = static_cast<double>(points.cols());
  const double log_peak =
      0.5 * d * (std::log(d) - kLogTwoPi - 1.0 - 2.0 * std::log(min_dist.value));
  return n * (std::log(n - 1.0) + log_peak);
}

Eigen::MatrixXd sample(const KernelDensityModel& model, Eigen::Index n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("sample count must be non-negative");
  const Eigen::Index d = model.n_dims();
  Eigen::MatrixXd out(n, d);
  Rng rng(seed);
  std::vector<double> cumulative(static_cast<std::size_t>(model.n_kernels()));
  double acc = 0.0;
  for (Eigen::Index j = 0; j < model.n_kernels(); ++j) {
    acc += model.weights()[j];
    cumulative[static_cast<std::size_t>(j)] = acc;
  }
  cumulative.back() = 1.0;  // guard against rounding in the final bin
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto j = static_cast<Eigen::Index>(it - cumulative.begin());
    for (Eigen::Index k = 0; k < d; ++k) {
      out(i, k) = model.centers()(j, k) + model.bandwidths()[j] * rng.normal();
    }
  }
  return out;
}

std::vector<CollapsePoint> collapse_curve(const KernelDensityModel& model,
                                          const Eigen::MatrixXd& points, Eigen::Index j,
                                          const std::vector<double>& sigmas) {
  if (j < 0 || j >= model.n_kernels()) {
    throw std::invalid_argument("component index out of range");
  }
  if (points.rows() != model.n_kernels() || points.cols() != model.n_dims() ||
      (points - model.centers()).cwiseAbs().maxCoeff() != 0.0) {
    throw std::invalid_argument("collapse curve expects the model's own training points");
  }
  if (sigmas.empty()) throw std::invalid_argument("empty bandwidth grid");
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    if (!(sigmas[k] > 0.0)) throw std::invalid_argument("bandwidth grid must be positive");
    if (k > 0 && !(sigmas[k] < sigmas[k - 1])) {
      throw std::invalid_argument("bandwidth grid must be strictly descending");
    }
  }

  const Eigen::MatrixXd sqdist = squared_distance_matrix(model.centers());
  std::vector<CollapsePoint> curve;
  curve.reserve(sigmas.size());
  for (const double sigma : sigmas) {
    const KernelDensityModel shrunk = model.with_bandwidth(j, sigma);
    curve.push_back({sigma, total_mll(shrunk, points).value, loo_mll(shrunk, sqdist).value});
  }
  return curve;
}

}  // namespace lookde
