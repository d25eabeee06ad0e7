#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lookde/dataset.hpp"
#include "lookde/stats.hpp"

namespace lookde {

struct PipelineConfig {
  int n_mc = 2000;                      // Monte-Carlo iterations per score sample
  double subsample_ratio = 0.5;         // n = floor(ratio * |test|), must end up >= 2
  Eigen::Index n_model_samples = 0;     // 0 resolves to |train| in compare_models
  std::uint64_t master_seed = 0;
  std::vector<SampleTest> sample_tests = {SampleTest::mmd(), SampleTest::energy()};
};

// A named empirical score distribution: n_mc evaluations of one two-sample
// statistic for one entity (the baseline or a fitted model).
struct ScoreSample {
  std::string entity;
  std::string sample_test;
  std::vector<double> scores;
};

// Anything the comparison can draw from: name plus a seeded sampler that
// returns n rows in the data's original units.
struct SamplableModel {
  std::string name;
  std::function<Eigen::MatrixXd(Eigen::Index n, std::uint64_t seed)> draw;
};

struct ComparisonEntry {
  std::string model;
  std::string sample_test;  // statistic that produced the score samples
  std::string model_test;   // statistic comparing the two score samples
  double score = 0.0;
};

struct ComparisonReport {
  PipelineConfig config;
  Eigen::Index subsample_size = 0;
  std::vector<ScoreSample> baseline;       // one per sample test
  std::vector<ScoreSample> model_scores;   // one per (model, sample test)
  std::vector<ComparisonEntry> entries;    // one per (model, sample test, model test)
};

struct Ecdf {
  std::vector<double> values;     // sorted, duplicates retained
  std::vector<double> fractions;  // k/n for k = 1..n
};

Ecdf ecdf(std::vector<double> scores);

// n distinct rows drawn without replacement (partial shuffle, seeded).
Eigen::MatrixXd subsample(const Eigen::MatrixXd& data, Eigen::Index n, std::uint64_t seed);

// Reference score distribution: statistic between independent subsamples of
// the training and test sets, one pair per Monte-Carlo iteration.
ScoreSample baseline_scores(const Dataset& train, const Dataset& test,
                            const SampleTest& test_kind, const PipelineConfig& config);

// Model score distribution: the model is sampled once (n_model_samples rows);
// each iteration compares a fresh test subsample against a fresh subsample of
// that one draw. n_model_samples must be resolved (> 0) by the caller.
ScoreSample model_scores(const SamplableModel& model, const Dataset& test,
                         const SampleTest& test_kind, const PipelineConfig& config);

// Full two-step comparison: baseline and model score distributions for every
// sample test, then KS, CvM and mean-difference between each model's scores
// and the baseline's. Deterministic given the master seed.
ComparisonReport compare_models(const std::vector<SamplableModel>& models,
                                const Dataset& train, const Dataset& test,
                                const PipelineConfig& config);

}  // namespace lookde
