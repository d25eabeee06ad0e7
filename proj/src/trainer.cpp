#include "lookde/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lookde/rng.hpp"

namespace lookde {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_distinct_rows(const Dataset& train) {
  if (train.has_duplicate_rows()) {
    throw std::invalid_argument(
        "training data contains duplicate rows; leave-one-out training requires distinct "
        "points (deduplicate the data or add a small jitter)");
  }
}

// Held-out log-kernel matrix with weights folded in and a -inf diagonal;
// shared by the E-step and the minibatch gradient.
Eigen::MatrixXd held_out_scores(const Eigen::MatrixXd& sqdist, const Eigen::VectorXd& sigma,
                                const Eigen::VectorXd& weights, Eigen::Index dims) {
  const double d = static_cast<double>(dims);
  const Eigen::ArrayXd coeff =
      weights.array().log() - d * sigma.array().log();
  const Eigen::ArrayXd inv_two_var = 0.5 / sigma.array().square();
  Eigen::MatrixXd f = (-(sqdist.array().rowwise() * inv_two_var.transpose())).matrix();
  f.array().rowwise() += coeff.transpose();
  f.diagonal().setConstant(kNegInf);
  return f;
}

Responsibilities softmax_rows(Eigen::MatrixXd f) {
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const double m = f.row(i).maxCoeff();
    f.row(i) = (f.row(i).array() - m).exp();
    f.row(i) /= f.row(i).sum();
  }
  return f;
}

}  // namespace

const char* to_string(FitStatus status) {
  return status == FitStatus::Converged ? "converged" : "max-iterations";
}

Responsibilities e_step(const KernelDensityModel& model, const Eigen::MatrixXd& sqdist) {
  if (model.n_kernels() < 2) {
    throw std::invalid_argument("responsibilities need at least 2 centers");
  }
  return softmax_rows(
      held_out_scores(sqdist, model.bandwidths(), model.weights(), model.n_dims()));
}

Responsibilities e_step(const KernelDensityModel& model) {
  return e_step(model, squared_distance_matrix(model.centers()));
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> m_step(const Eigen::MatrixXd& centers,
                                                   const Responsibilities& responsibilities,
                                                   bool fit_weights,
                                                   const Eigen::VectorXd& prev_bandwidths) {
  const Eigen::Index n = centers.rows();
  if (responsibilities.rows() != n || responsibilities.cols() != n) {
    throw std::invalid_argument("responsibility matrix must be n x n");
  }
  if (prev_bandwidths.size() != n) {
    throw std::invalid_argument("previous bandwidth count does not match center count");
  }
  const Eigen::VectorXd col_mass = responsibilities.colwise().sum();
  if (!(col_mass.sum() > 0.0)) {
    throw std::invalid_argument("all-zero responsibility matrix");
  }

  const Eigen::MatrixXd sqdist = squared_distance_matrix(centers);
  const Eigen::VectorXd weighted_sq =
      sqdist.cwiseProduct(responsibilities).colwise().sum();
  const double d = static_cast<double>(centers.cols());

  Eigen::VectorXd sigma(n);
  bool any_empty = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (col_mass[j] > 0.0) {
      sigma[j] = std::sqrt(weighted_sq[j] / (d * col_mass[j]));
    } else {
      // Unreachable through e_step in practice; keep the component inert.
      sigma[j] = prev_bandwidths[j];
      any_empty = true;
    }
  }

  Eigen::VectorXd weights;
  if (fit_weights) {
    weights = col_mass / static_cast<double>(n);
    if (any_empty) {
      // Clamp starved components to the smallest normal weight so the model
      // invariants (all weights positive) survive, then renormalize.
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!(weights[j] > 0.0)) weights[j] = std::numeric_limits<double>::min();
      }
      weights /= weights.sum();
    }
  } else {
    weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  }
  return {std::move(sigma), std::move(weights)};
}

std::pair<KernelDensityModel, FitTrace> fit_em(const Dataset& train, const EmConfig& config) {
  check_distinct_rows(train);
  const Eigen::Index n = train.n_rows();
  const Eigen::Index d = train.n_dims();
  if (n < 2) throw std::invalid_argument("leave-one-out training needs at least 2 rows");
  if (!(config.initial_bandwidth > 0.0)) {
    throw std::invalid_argument("initial bandwidth must be positive");
  }
  if (!(config.convergence_threshold > 0.0)) {
    throw std::invalid_argument("convergence threshold must be positive");
  }
  if (config.max_iterations < 1) throw std::invalid_argument("max iterations must be >= 1");

  const auto start = Clock::now();
  const Eigen::MatrixXd& centers = train.values();
  const Eigen::MatrixXd sqdist = squared_distance_matrix(centers);

  Eigen::VectorXd sigma = Eigen::VectorXd::Constant(n, config.initial_bandwidth);
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));

  auto build_model = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& w) {
    return config.fit_weights ? KernelDensityModel::pi_kde(centers, s, w)
                              : KernelDensityModel::a_kde(centers, s);
  };

  FitTrace trace;
  double objective = loo_mll(build_model(sigma, weights), sqdist).value;
  trace.records.push_back(
      {0, objective, sigma.minCoeff(), sigma.maxCoeff(), seconds_since(start)});

  for (int iteration = 1; iteration <= config.max_iterations; ++iteration) {
    const Responsibilities resp =
        softmax_rows(held_out_scores(sqdist, sigma, weights, d));

    // Inline M-step on the cached distance matrix (same update as m_step).
    const Eigen::VectorXd col_mass = resp.colwise().sum();
    const Eigen::VectorXd weighted_sq = sqdist.cwiseProduct(resp).colwise().sum();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (col_mass[j] > 0.0) {
        sigma[j] = std::sqrt(weighted_sq[j] / (static_cast<double>(d) * col_mass[j]));
      }
    }
    sigma = sigma.cwiseMax(config.bandwidth_floor);
    if (config.fit_weights) {
      weights = col_mass / static_cast<double>(n);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!(weights[j] > 0.0)) weights[j] = std::numeric_limits<double>::min();
      }
      weights /= weights.sum();
    }

    const double updated = loo_mll(build_model(sigma, weights), sqdist).value;
    if (!std::isfinite(updated)) {
      throw std::runtime_error("leave-one-out objective became non-finite at iteration " +
                               std::to_string(iteration));
    }
    if (updated < objective - 1e-9 * std::abs(objective)) {
      throw std::runtime_error(
          "objective decreased during a fixed-point update (from " +
          std::to_string(objective) + " to " + std::to_string(updated) + " at iteration " +
          std::to_string(iteration) + "); this indicates a defect");
    }
    trace.records.push_back(
        {iteration, updated, sigma.minCoeff(), sigma.maxCoeff(), seconds_since(start)});

    const double delta = std::abs(updated - objective) / static_cast<double>(n);
    objective = updated;
    if (delta < config.convergence_threshold) {
      trace.status = FitStatus::Converged;
      break;
    }
  }

  return {build_model(sigma, weights), std::move(trace)};
}

std::pair<KernelDensityModel, FitTrace> fit_adam(const Dataset& train,
                                                 const AdamConfig& config) {
  check_distinct_rows(train);
  const Eigen::Index n = train.n_rows();
  const Eigen::Index dims = train.n_dims();
  if (n < 2) throw std::invalid_argument("leave-one-out training needs at least 2 rows");
  if (!(config.initial_bandwidth > 0.0)) {
    throw std::invalid_argument("initial bandwidth must be positive");
  }
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (config.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (config.max_epochs < 1) throw std::invalid_argument("max epochs must be >= 1");

  const auto start = Clock::now();
  const Eigen::MatrixXd& centers = train.values();
  const Eigen::MatrixXd sqdist = squared_distance_matrix(centers);
  const double d = static_cast<double>(dims);
  const Eigen::Index batch_size = std::min<Eigen::Index>(config.batch_size, n);

  // Optimize u_j = log sigma_j; positivity holds by construction and the
  // gradient picks up a factor sigma_j from the chain rule.
  Eigen::ArrayXd u = Eigen::ArrayXd::Constant(n, std::log(config.initial_bandwidth));
  Eigen::ArrayXd first_moment = Eigen::ArrayXd::Zero(n);
  Eigen::ArrayXd second_moment = Eigen::ArrayXd::Zero(n);
  long step = 0;

  auto objective_at = [&](const Eigen::ArrayXd& log_sigma) {
    return loo_mll(KernelDensityModel::a_kde(centers, log_sigma.exp().matrix()), sqdist)
        .value;
  };

  FitTrace trace;
  double objective = objective_at(u);
  trace.records.push_back({0, objective, std::exp(u.minCoeff()), std::exp(u.maxCoeff()),
                           seconds_since(start)});

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::MatrixXd batch_sq(batch_size, n);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng rng(derive_seed(config.shuffle_seed, "adam-shuffle", static_cast<std::uint64_t>(epoch)));
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    for (Eigen::Index begin = 0; begin < n; begin += batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(batch_size, n - begin);
      batch_sq.resize(count, n);
      for (Eigen::Index b = 0; b < count; ++b) {
        batch_sq.row(b) = sqdist.row(order[static_cast<std::size_t>(begin + b)]);
      }

      const Eigen::ArrayXd sigma = u.exp();
      // Held-out scores for the batch rows: weights are uniform here and
      // cancel in the softmax, so only the kernel terms are needed.
      const Eigen::ArrayXd coeff = -d * sigma.log();
      const Eigen::ArrayXd inv_two_var = 0.5 / sigma.square();
      Eigen::MatrixXd f =
          (-(batch_sq.array().rowwise() * inv_two_var.transpose())).matrix();
      f.array().rowwise() += coeff.transpose();
      for (Eigen::Index b = 0; b < count; ++b) {
        f(b, order[static_cast<std::size_t>(begin + b)]) = kNegInf;
      }
      Eigen::MatrixXd w(count, n);
      for (Eigen::Index b = 0; b < count; ++b) {
        const double m = f.row(b).maxCoeff();
        w.row(b) = (f.row(b).array() - m).exp();
        w.row(b) /= w.row(b).sum();
      }

      const Eigen::ArrayXd col_w = w.colwise().sum().transpose().array();
      const Eigen::ArrayXd col_dw =
          batch_sq.cwiseProduct(w).colwise().sum().transpose().array();
      const double scale = static_cast<double>(n) / static_cast<double>(count);
      // Gradient w.r.t. sigma, then w.r.t. u via the chain rule.
      const Eigen::ArrayXd grad_sigma = col_dw / sigma.cube() - d * col_w / sigma;
      const Eigen::ArrayXd grad_u = scale * sigma * grad_sigma;

      ++step;
      first_moment = config.beta1 * first_moment + (1.0 - config.beta1) * grad_u;
      second_moment = config.beta2 * second_moment + (1.0 - config.beta2) * grad_u.square();
      const Eigen::ArrayXd m_hat =
          first_moment / (1.0 - std::pow(config.beta1, static_cast<double>(step)));
      const Eigen::ArrayXd v_hat =
          second_moment / (1.0 - std::pow(config.beta2, static_cast<double>(step)));
      u += config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }

    const double updated = objective_at(u);
    if (!std::isfinite(updated)) {
      throw DivergenceError("leave-one-out objective became non-finite at epoch " +
                            std::to_string(epoch) + "; lower the learning rate (currently " +
                            std::to_string(config.learning_rate) + ")");
    }
    if (updated < objective - 1e3) {
      throw DivergenceError("objective fell by more than 1000 nats in one epoch (from " +
                            std::to_string(objective) + " to " + std::to_string(updated) +
                            "); the learning rate " + std::to_string(config.learning_rate) +
                            " is too large for this data");
    }
    trace.records.push_back({epoch, updated, std::exp(u.minCoeff()), std::exp(u.maxCoeff()),
                             seconds_since(start)});

    const double delta = std::abs(updated - objective) / static_cast<double>(n);
    objective = updated;
    if (delta < config.convergence_threshold) {
      trace.status = FitStatus::Converged;
      break;
    }
  }

  return {KernelDensityModel::a_kde(centers, u.exp().matrix()), std::move(trace)};
}

}  // namespace lookde
