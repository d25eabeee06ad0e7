#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lookde/dataset.hpp"
#include "lookde/density.hpp"

namespace lookde {

// Raised when stochastic training blows up (objective falls off a cliff or
// turns non-finite); the message names the learning rate to adjust.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Responsibilities r_ij: probability that point i is explained by component j
// of the mixture with component i removed. Rows sum to 1, diagonal is zero.
using Responsibilities = Eigen::MatrixXd;

struct EmConfig {
  double convergence_threshold = 1e-4;  // on |delta objective| / n per iteration
  int max_iterations = 10000;
  double initial_bandwidth = 0.1;
  double bandwidth_floor = 1e-10;  // safety net only, never load-bearing
  bool fit_weights = false;        // false trains a-kde, true trains pi-kde
};

struct AdamConfig {
  double learning_rate = 0.01;
  Eigen::Index batch_size = 128;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double convergence_threshold = 1e-4;  // on |delta objective| / n per epoch
  int max_epochs = 2000;
  double initial_bandwidth = 0.1;
  std::uint64_t shuffle_seed = 0;
};

enum class FitStatus { Converged, MaxIterations };

struct FitRecord {
  int iteration = 0;  // 0 is the state before the first update
  double loo_mll = 0.0;
  double min_sigma = 0.0;
  double max_sigma = 0.0;
  double seconds = 0.0;  // wall clock since the fit started
};

struct FitTrace {
  std::vector<FitRecord> records;
  FitStatus status = FitStatus::MaxIterations;
};

const char* to_string(FitStatus status);

// Leave-one-out responsibilities of the model's current parameters, computed
// in log space. Mixture weights enter the softmax (they cancel for a-kde).
Responsibilities e_step(const KernelDensityModel& model);
Responsibilities e_step(const KernelDensityModel& model, const Eigen::MatrixXd& sqdist);

// Closed-form parameter update from responsibilities:
//   sigma_j^2 = (1/d) * sum_i r_ij |x_i - x_j|^2 / sum_i r_ij
//   pi_j      = (1/n) * sum_i r_ij               (when fit_weights)
// A component that receives no responsibility keeps its previous bandwidth and
// drops to (numerically) zero weight. Returns (bandwidths, weights).
std::pair<Eigen::VectorXd, Eigen::VectorXd> m_step(const Eigen::MatrixXd& centers,
                                                   const Responsibilities& responsibilities,
                                                   bool fit_weights,
                                                   const Eigen::VectorXd& prev_bandwidths);

// Fixed-point iteration of e_step/m_step on the leave-one-out objective.
// Deterministic, monotone ascent (a decrease beyond 1e-9 relative tolerance
// aborts, since it indicates a defect, not noise). Throws on duplicate rows.
std::pair<KernelDensityModel, FitTrace> fit_em(const Dataset& train, const EmConfig& config);

// Stochastic first-order ascent on the same objective, parameterized as
// u_j = log sigma_j with Adam updates over minibatches of the outer sum.
// Trains the unweighted model only. One trace record per epoch.
std::pair<KernelDensityModel, FitTrace> fit_adam(const Dataset& train,
                                                 const AdamConfig& config);

}  // namespace lookde
