#include "lookde/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lookde/rng.hpp"

namespace lookde {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

struct ComponentCholesky {
  Eigen::MatrixXd lower;
  double log_det = 0.0;  // log det of the covariance
  bool ok = false;
};

ComponentCholesky factor(const Eigen::MatrixXd& covariance) {
  ComponentCholesky out;
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) return out;
  out.lower = llt.matrixL();
  out.log_det = 2.0 * out.lower.diagonal().array().log().sum();
  out.ok = out.lower.diagonal().minCoeff() > 0.0 && std::isfinite(out.log_det);
  return out;
}

// log N(x_i; mu, Sigma) for every row of x, given the Cholesky factor.
Eigen::VectorXd component_log_density(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                                      const ComponentCholesky& chol) {
  const double d = static_cast<double>(x.cols());
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  const Eigen::MatrixXd solved =
      chol.lower.triangularView<Eigen::Lower>().solve(centered.transpose());
  const Eigen::VectorXd quad = solved.colwise().squaredNorm();
  return (-0.5 * (d * kLogTwoPi + chol.log_det + quad.array())).matrix();
}

double smallest_eigenvalue(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) return -1.0;
  return solver.eigenvalues().minCoeff();
}

// k-means++ seeding: first mean uniform, each next mean drawn with probability
// proportional to the squared distance from the nearest chosen mean.
Eigen::MatrixXd seed_means(const Eigen::MatrixXd& x, Eigen::Index k, Rng& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd means(k, x.cols());
  means.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd nearest_sq =
      (x.rowwise() - means.row(0)).rowwise().squaredNorm();
  for (Eigen::Index c = 1; c < k; ++c) {
    const double total = nearest_sq.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += nearest_sq[i];
        if (acc > target) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    means.row(c) = x.row(pick);
    nearest_sq = nearest_sq.cwiseMin(
        (x.rowwise() - means.row(c)).rowwise().squaredNorm());
  }
  return means;
}

GmmFitResult failed(GmmFailure failure, int iterations, double last_ll,
                    std::vector<double> trace) {
  GmmFitResult result;
  result.failure = failure;
  result.iterations = iterations;
  result.final_log_likelihood = last_ll;
  result.log_likelihood_trace = std::move(trace);
  return result;
}

}  // namespace

const char* to_string(GmmFailure failure) {
  return failure == GmmFailure::CovarianceSingular ? "covariance-singular" : "not-converged";
}

void validate_gmm(const GmmModel& model) {
  const Eigen::Index k = model.n_components();
  const Eigen::Index d = model.n_dims();
  if (k < 1) throw std::invalid_argument("mixture needs at least one component");
  if (model.means.rows() != k || static_cast<Eigen::Index>(model.covariances.size()) != k) {
    throw std::invalid_argument("component count mismatch between weights, means, covariances");
  }
  if (!model.means.allFinite()) throw std::invalid_argument("non-finite mean");
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!std::isfinite(model.weights[j]) || !(model.weights[j] > 0.0)) {
      throw std::invalid_argument("mixture weights must be positive and finite");
    }
  }
  if (std::abs(model.weights.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights must sum to 1");
  }
  for (const Eigen::MatrixXd& cov : model.covariances) {
    if (cov.rows() != d || cov.cols() != d) {
      throw std::invalid_argument("covariance dimension mismatch");
    }
    if (!cov.allFinite()) throw std::invalid_argument("non-finite covariance");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
      throw std::invalid_argument("covariance is not symmetric");
    }
    if (!(smallest_eigenvalue(cov) > 0.0)) {
      throw std::invalid_argument("covariance is not positive definite");
    }
  }
}

Eigen::Index matched_component_count(Eigen::Index n_train, Eigen::Index d, GmmTarget target) {
  if (n_train < 2) throw std::invalid_argument("component matching needs at least 2 rows");
  if (d < 1) throw std::invalid_argument("component matching needs at least 1 dimension");
  // Parameters per component: d for the mean, d(d+1)/2 for the covariance,
  // 1 for the weight; the simplex constraint removes one weight overall.
  const double per_component = static_cast<double>(d + d * (d + 1) / 2 + 1);
  const double target_params =
      target == GmmTarget::A ? static_cast<double>(n_train)
                             : static_cast<double>(2 * n_train - 1);
  auto mismatch = [&](Eigen::Index k) {
    return std::abs(static_cast<double>(k) * per_component - 1.0 - target_params);
  };
  const auto low = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::floor((target_params + 1.0) / per_component)));
  Eigen::Index best = low;
  if (mismatch(low + 1) < mismatch(low)) best = low + 1;
  return best;
}

GmmFitResult fit_gmm(const Dataset& train, Eigen::Index k, std::uint64_t seed,
                     const GmmConfig& config) {
  const Eigen::Index n = train.n_rows();
  if (k < 1) throw std::invalid_argument("component count must be >= 1");
  if (n < k) throw std::invalid_argument("need at least as many rows as components");
  if (config.max_iterations < 1) throw std::invalid_argument("max iterations must be >= 1");

  const Eigen::MatrixXd& x = train.values();
  Rng rng(derive_seed(seed, "gmm-seeding"));

  GmmModel params;
  params.weights = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  params.means = seed_means(x, k, rng);
  // Population covariance of the whole sample as every component's start.
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd global_cov =
      centered.transpose() * centered / static_cast<double>(n);
  global_cov.diagonal().array() += config.covariance_regularization;
  params.covariances.assign(static_cast<std::size_t>(k), global_cov);

  std::vector<double> ll_trace;
  double previous_ll = -std::numeric_limits<double>::infinity();

  for (int iteration = 1; iteration <= config.max_iterations; ++iteration) {
    // E-step: log responsibilities under the current parameters.
    Eigen::MatrixXd log_resp(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const ComponentCholesky chol = factor(params.covariances[static_cast<std::size_t>(j)]);
      if (!chol.ok) {
        return failed(GmmFailure::CovarianceSingular, iteration, previous_ll,
                      std::move(ll_trace));
      }
      log_resp.col(j) =
          component_log_density(x, params.means.row(j).transpose(), chol).array() +
          std::log(params.weights[j]);
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = log_resp.row(i).maxCoeff();
      const double lse = m + std::log((log_resp.row(i).array() - m).exp().sum());
      ll += lse;
      log_resp.row(i) = (log_resp.row(i).array() - lse).exp();
    }
    if (!std::isfinite(ll)) {
      return failed(GmmFailure::CovarianceSingular, iteration, previous_ll,
                    std::move(ll_trace));
    }
    ll_trace.push_back(ll);

    const double delta = std::abs(ll - previous_ll) / static_cast<double>(n);
    previous_ll = ll;
    if (iteration > 1 && delta < config.convergence_threshold) {
      GmmFitResult result;
      result.model = std::move(params);
      result.iterations = iteration;
      result.final_log_likelihood = ll;
      result.log_likelihood_trace = std::move(ll_trace);
      return result;
    }

    // M-step: weighted moment updates. log_resp now holds the responsibilities.
    const Eigen::VectorXd mass = log_resp.colwise().sum();
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!(mass[j] > 0.0)) {
        return failed(GmmFailure::CovarianceSingular, iteration, previous_ll,
                      std::move(ll_trace));
      }
      params.weights[j] = mass[j] / static_cast<double>(n);
      params.means.row(j) = (log_resp.col(j).transpose() * x) / mass[j];
      const Eigen::MatrixXd shifted = x.rowwise() - params.means.row(j);
      Eigen::MatrixXd cov =
          shifted.transpose() * log_resp.col(j).asDiagonal() * shifted / mass[j];
      cov = 0.5 * (cov + cov.transpose());
      cov.diagonal().array() += config.covariance_regularization;
      if (!cov.allFinite() || smallest_eigenvalue(cov) < config.min_eigenvalue) {
        return failed(GmmFailure::CovarianceSingular, iteration, previous_ll,
                      std::move(ll_trace));
      }
      params.covariances[static_cast<std::size_t>(j)] = std::move(cov);
    }
  }

  return failed(GmmFailure::NotConverged, config.max_iterations, previous_ll,
                std::move(ll_trace));
}

Eigen::VectorXd gmm_log_density(const GmmModel& model, const Eigen::MatrixXd& points) {
  validate_gmm(model);
  if (points.cols() != model.n_dims()) {
    throw std::invalid_argument("evaluation points have the wrong dimension");
  }
  if (points.rows() == 0) return Eigen::VectorXd(0);
  const Eigen::Index k = model.n_components();
  Eigen::MatrixXd scores(points.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const ComponentCholesky chol = factor(model.covariances[static_cast<std::size_t>(j)]);
    if (!chol.ok) throw std::runtime_error("covariance is numerically singular");
    scores.col(j) =
        component_log_density(points, model.means.row(j).transpose(), chol).array() +
        std::log(model.weights[j]);
  }
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    out[i] = m + std::log((scores.row(i).array() - m).exp().sum());
  }
  return out;
}

double gmm_log_density(const GmmModel& model, const Eigen::VectorXd& x) {
  return gmm_log_density(model, Eigen::MatrixXd(x.transpose()))[0];
}

Eigen::MatrixXd gmm_sample(const GmmModel& model, Eigen::Index n, std::uint64_t seed) {
  validate_gmm(model);
  if (n < 0) throw std::invalid_argument("sample count must be non-negative");
  const Eigen::Index d = model.n_dims();
  const Eigen::Index k = model.n_components();
  std::vector<Eigen::MatrixXd> lowers;
  lowers.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    const ComponentCholesky chol = factor(model.covariances[static_cast<std::size_t>(j)]);
    if (!chol.ok) throw std::runtime_error("covariance is numerically singular");
    lowers.push_back(chol.lower);
  }
  std::vector<double> cumulative(static_cast<std::size_t>(k));
  double acc = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    acc += model.weights[j];
    cumulative[static_cast<std::size_t>(j)] = acc;
  }
  cumulative.back() = 1.0;

  Rng rng(seed);
  Eigen::MatrixXd out(n, d);
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto j = static_cast<std::size_t>(it - cumulative.begin());
    for (Eigen::Index c = 0; c < d; ++c) z[c] = rng.normal();
    out.row(i) = model.means.row(static_cast<Eigen::Index>(j)) +
                 (lowers[j] * z).transpose();
  }
  return out;
}

}  // namespace lookde
