#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "lookde/dataset.hpp"

namespace lookde {

enum class KdeKind { AKde, PiKde };

// Gaussian mixture whose components sit on fixed centers, one isotropic
// bandwidth sigma_j per component. The unweighted variant (a-kde) mixes with
// uniform 1/n weights; the weighted variant (pi-kde) carries a learned simplex
// weight pi_j per component. Centers never move during training.
class KernelDensityModel {
 public:
  static KernelDensityModel a_kde(Eigen::MatrixXd centers, Eigen::VectorXd bandwidths);
  static KernelDensityModel pi_kde(Eigen::MatrixXd centers, Eigen::VectorXd bandwidths,
                                   Eigen::VectorXd weights);

  KdeKind kind() const { return uniform_weights_ ? KdeKind::AKde : KdeKind::PiKde; }
  bool uniform_weights() const { return uniform_weights_; }
  const Eigen::MatrixXd& centers() const { return centers_; }
  const Eigen::VectorXd& bandwidths() const { return bandwidths_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index n_kernels() const { return centers_.rows(); }
  Eigen::Index n_dims() const { return centers_.cols(); }

  // Copy with one bandwidth overridden (used by the collapse demonstration).
  KernelDensityModel with_bandwidth(Eigen::Index j, double sigma) const;

 private:
  KernelDensityModel(Eigen::MatrixXd centers, Eigen::VectorXd bandwidths,
                     Eigen::VectorXd weights, bool uniform);
  void validate() const;

  Eigen::MatrixXd centers_;
  Eigen::VectorXd bandwidths_;
  Eigen::VectorXd weights_;
  bool uniform_weights_ = true;
};

enum class ObjectiveKind { TotalMll, LooMll };

struct ObjectiveValue {
  double value = 0.0;
  ObjectiveKind kind = ObjectiveKind::TotalMll;
};

// All-pairs squared Euclidean distances, computed pair by pair rather than via
// the Gram identity so that near-duplicate points keep full precision.
Eigen::MatrixXd squared_distance_matrix(const Eigen::MatrixXd& points);
Eigen::MatrixXd cross_squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// log p(x) under the mixture, evaluated with log-sum-exp. Mixture weights
// always enter here: this is the normalized density for either model kind.
double log_density(const KernelDensityModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd log_density(const KernelDensityModel& model, const Eigen::MatrixXd& points);

// Sum of log p(x_i) over the rows of `points` (not averaged). Empty input
// yields 0 by the empty-sum convention.
ObjectiveValue total_mll(const KernelDensityModel& model, const Eigen::MatrixXd& points);

// Leave-one-out log-likelihood of the model's own centers: each center is
// scored against the mixture with its own component removed. The unweighted
// variant sums raw kernels, the weighted variant multiplies in pi_j; see
// loo_weight_offset for the exact relation between the two conventions.
ObjectiveValue loo_mll(const KernelDensityModel& model);
ObjectiveValue loo_mll(const KernelDensityModel& model, const Eigen::MatrixXd& sqdist);

// loo_mll(a-kde) == loo_mll(pi-kde with uniform weights) + n*log(n): the
// weighted objective carries the log(1/n) factors the unweighted one drops.
double loo_weight_offset(Eigen::Index n);

// d(loo_mll)/d(sigma_j) for all j, in closed form via softmax responsibilities.
Eigen::VectorXd loo_gradient(const KernelDensityModel& model);
Eigen::VectorXd loo_gradient(const KernelDensityModel& model, const Eigen::MatrixXd& sqdist);

// Finite upper bound on the unweighted leave-one-out objective, attained at
// sigma^2 = m^2/d where m is the minimum pairwise distance:
//   n * (log(n-1) + (d/2) * (log d - log(2*pi*e) - 2*log m)).
// Throws if the points contain repeats (the bound would be infinite).
double loo_upper_bound(const Eigen::MatrixXd& points);

// Ancestral sampling: pick a component by weight, then draw from its Gaussian.
Eigen::MatrixXd sample(const KernelDensityModel& model, Eigen::Index n, std::uint64_t seed);

struct CollapsePoint {
  double sigma = 0.0;
  double total_mll = 0.0;
  double loo_mll = 0.0;
};

// Shrinks the bandwidth of component j through `sigmas` (strictly descending,
// positive) and records both objectives at each step. The total objective
// diverges linearly in -log sigma while the leave-one-out objective stays
// bounded; this is the observable difference between the two.
std::vector<CollapsePoint> collapse_curve(const KernelDensityModel& model,
                                          const Eigen::MatrixXd& points, Eigen::Index j,
                                          const std::vector<double>& sigmas);

}  // namespace lookde
