#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "lookde/dataset.hpp"

namespace lookde {

// Full-covariance Gaussian mixture, the conventional baseline whose parameter
// count the kernel models are compared against.
struct GmmModel {
  Eigen::VectorXd weights;                   // simplex, all > 0
  Eigen::MatrixXd means;                     // k x d
  std::vector<Eigen::MatrixXd> covariances;  // k symmetric positive definite d x d

  Eigen::Index n_components() const { return weights.size(); }
  Eigen::Index n_dims() const { return means.cols(); }
};

void validate_gmm(const GmmModel& model);

// Which kernel model the component count is matched against: the unweighted
// model has n free parameters (its bandwidths), the weighted one 2n-1 (it adds
// n-1 free mixture weights).
enum class GmmTarget { A, Pi };

enum class GmmFailure { CovarianceSingular, NotConverged };

const char* to_string(GmmFailure failure);

// Exactly one of model/failure is set.
struct GmmFitResult {
  std::optional<GmmModel> model;
  std::optional<GmmFailure> failure;
  int iterations = 0;
  double final_log_likelihood = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> log_likelihood_trace;  // one entry per EM iteration

  bool ok() const { return model.has_value(); }
};

struct GmmConfig {
  int max_iterations = 500;
  double convergence_threshold = 1e-4;  // on |delta log-likelihood| / n
  double covariance_regularization = 0.0;  // epsilon added to diagonals; off by default
  double min_eigenvalue = 1e-12;           // below this a covariance counts as singular
};

// Smallest k whose mixture parameter count k*(d + d(d+1)/2 + 1) - 1 is closest
// to the kernel model's count (n for the unweighted target, 2n-1 for the
// weighted one); ties resolve toward fewer components.
Eigen::Index matched_component_count(Eigen::Index n_train, Eigen::Index d, GmmTarget target);

// Standard EM with k-means++ seeding of the means, global covariance as the
// initial covariance of every component, uniform initial weights. Covariance
// singularity is reported through the result, never thrown: running this to
// failure is an expected use.
GmmFitResult fit_gmm(const Dataset& train, Eigen::Index k, std::uint64_t seed,
                     const GmmConfig& config = GmmConfig{});

double gmm_log_density(const GmmModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd gmm_log_density(const GmmModel& model, const Eigen::MatrixXd& points);

Eigen::MatrixXd gmm_sample(const GmmModel& model, Eigen::Index n, std::uint64_t seed);

}  // namespace lookde
