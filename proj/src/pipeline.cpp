#include "lookde/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lookde/rng.hpp"

namespace lookde {

namespace {

Eigen::Index resolve_subsample_size(const PipelineConfig& config, Eigen::Index n_test) {
  if (!(config.subsample_ratio > 0.0) || config.subsample_ratio > 1.0) {
    throw std::invalid_argument("subsample ratio must lie in (0, 1]");
  }
  const auto n = static_cast<Eigen::Index>(
      std::floor(config.subsample_ratio * static_cast<double>(n_test)));
  if (n < 2) {
    throw std::invalid_argument("subsample would have " + std::to_string(n) +
                                " rows; need at least 2 (increase the ratio or the test set)");
  }
  return n;
}

void check_mc_count(const PipelineConfig& config) {
  if (config.n_mc < 1) throw std::invalid_argument("Monte-Carlo count must be >= 1");
}

}  // namespace

Ecdf ecdf(std::vector<double> scores) {
  if (scores.empty()) throw std::invalid_argument("ECDF of an empty score list");
  std::sort(scores.begin(), scores.end());
  Ecdf out;
  out.fractions.resize(scores.size());
  const double n = static_cast<double>(scores.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out.fractions[k] = static_cast<double>(k + 1) / n;
  }
  out.values = std::move(scores);
  return out;
}

Eigen::MatrixXd subsample(const Eigen::MatrixXd& data, Eigen::Index n, std::uint64_t seed) {
  const Eigen::Index rows = data.rows();
  if (n < 1 || n > rows) {
    throw std::invalid_argument("subsample size " + std::to_string(n) +
                                " out of range for " + std::to_string(rows) + " rows");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  // Partial shuffle: after i steps the first i entries are a uniform draw
  // without replacement.
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto j =
        i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(rows - i)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  Eigen::MatrixXd out(n, data.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = data.row(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

ScoreSample baseline_scores(const Dataset& train, const Dataset& test,
                            const SampleTest& test_kind, const PipelineConfig& config) {
  check_mc_count(config);
  const Eigen::Index n = resolve_subsample_size(config, test.n_rows());
  if (n > train.n_rows()) {
    throw std::invalid_argument("subsample size exceeds the training set");
  }
  ScoreSample sample{"baseline", test_kind.name(), {}};
  sample.scores.reserve(static_cast<std::size_t>(config.n_mc));
  const std::string test_tag = "baseline.test." + test_kind.name();
  const std::string train_tag = "baseline.train." + test_kind.name();
  for (int i = 0; i < config.n_mc; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    const Eigen::MatrixXd from_test =
        subsample(test.values(), n, derive_seed(config.master_seed, test_tag, idx));
    const Eigen::MatrixXd from_train =
        subsample(train.values(), n, derive_seed(config.master_seed, train_tag, idx));
    sample.scores.push_back(sample_test_statistic(from_test, from_train, test_kind));
  }
  return sample;
}

ScoreSample model_scores(const SamplableModel& model, const Dataset& test,
                         const SampleTest& test_kind, const PipelineConfig& config) {
  check_mc_count(config);
  const Eigen::Index n = resolve_subsample_size(config, test.n_rows());
  if (config.n_model_samples < 1) {
    throw std::invalid_argument("n_model_samples must be resolved before scoring a model");
  }
  if (config.n_model_samples < n) {
    throw std::invalid_argument("n_model_samples is smaller than the subsample size");
  }
  // One draw from the model; every iteration subsamples this fixed set. The
  // draw seed does not depend on the sample test, so both statistics see the
  // same synthetic points.
  const Eigen::MatrixXd drawn = model.draw(
      config.n_model_samples, derive_seed(config.master_seed, "model.draw." + model.name));
  if (drawn.rows() != config.n_model_samples || drawn.cols() != test.n_dims()) {
    throw std::runtime_error("model '" + model.name + "' drew a sample of the wrong shape");
  }

  ScoreSample sample{model.name, test_kind.name(), {}};
  sample.scores.reserve(static_cast<std::size_t>(config.n_mc));
  const std::string test_tag = "model.test." + model.name + "." + test_kind.name();
  const std::string sub_tag = "model.sub." + model.name + "." + test_kind.name();
  for (int i = 0; i < config.n_mc; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    const Eigen::MatrixXd from_test =
        subsample(test.values(), n, derive_seed(config.master_seed, test_tag, idx));
    const Eigen::MatrixXd from_model =
        subsample(drawn, n, derive_seed(config.master_seed, sub_tag, idx));
    sample.scores.push_back(sample_test_statistic(from_test, from_model, test_kind));
  }
  return sample;
}

ComparisonReport compare_models(const std::vector<SamplableModel>& models,
                                const Dataset& train, const Dataset& test,
                                const PipelineConfig& config) {
  if (models.empty()) throw std::invalid_argument("no models to compare");
  if (config.sample_tests.empty()) throw std::invalid_argument("no sample tests configured");
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = i + 1; j < models.size(); ++j) {
      if (models[i].name == models[j].name) {
        throw std::invalid_argument("duplicate model name: " + models[i].name);
      }
    }
  }

  ComparisonReport report;
  report.config = config;
  if (report.config.n_model_samples < 1) {
    report.config.n_model_samples = train.n_rows();
  }
  report.subsample_size = resolve_subsample_size(config, test.n_rows());

  for (const SampleTest& test_kind : report.config.sample_tests) {
    report.baseline.push_back(baseline_scores(train, test, test_kind, report.config));
  }
  for (const SamplableModel& model : models) {
    for (const SampleTest& test_kind : report.config.sample_tests) {
      report.model_scores.push_back(model_scores(model, test, test_kind, report.config));
    }
  }

  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    for (std::size_t ti = 0; ti < report.config.sample_tests.size(); ++ti) {
      const ScoreSample& base = report.baseline[ti];
      const ScoreSample& scored =
          report.model_scores[mi * report.config.sample_tests.size() + ti];
      report.entries.push_back({scored.entity, scored.sample_test, "ks",
                                ks_two_sample(base.scores, scored.scores)});
      report.entries.push_back({scored.entity, scored.sample_test, "cvm",
                                cvm_two_sample(base.scores, scored.scores)});
      report.entries.push_back({scored.entity, scored.sample_test, "delta_mean",
                                mean_diff(scored.scores, base.scores)});
    }
  }
  return report;
}

}  // namespace lookde
