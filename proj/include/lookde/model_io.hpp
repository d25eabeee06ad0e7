#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lookde/dataset.hpp"
#include "lookde/density.hpp"
#include "lookde/gmm.hpp"
#include "lookde/pipeline.hpp"
#include "lookde/trainer.hpp"

namespace lookde {

// Minimal streaming JSON writer with a fixed, code-defined key order and
// doubles printed with 17 significant digits, so that identical inputs always
// produce byte-identical files (round-trips are lossless).
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& name);
  JsonWriter& value(double v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(std::uint64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& v);
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& value(const Eigen::VectorXd& v);
  JsonWriter& value(const Eigen::MatrixXd& v);  // array of row arrays

  const std::string& str() const { return out_; }

 private:
  void separate();
  std::string out_;
  std::vector<bool> needs_comma_;
  bool after_key_ = false;
};

// Reproducibility block stored with every fitted model.
struct FitProvenance {
  std::string command;  // the invocation that produced the model
  std::uint64_t seed = 0;
  std::string optimizer;  // "em", "adam" or "gmm-em"
  double convergence_threshold = 0.0;
  double initial_bandwidth = 0.0;   // kernel models only
  double learning_rate = 0.0;       // adam only
  Eigen::Index batch_size = 0;      // adam only
  int max_iterations = 0;
  std::string status;  // "converged" or "max-iterations"
  int iterations = 0;
};

// A model as stored on disk: parameters plus the normalization applied to the
// training data. Exactly one of kde/gmm is set.
struct StoredModel {
  std::string kind;  // "a-kde", "pi-kde" or "gmm"
  std::optional<KernelDensityModel> kde;
  std::optional<GmmModel> gmm;
  NormStats stats;
  bool normalized = true;
  std::vector<std::string> feature_names;
  Eigen::Index train_size = 0;
  FitProvenance provenance;

  // Draws in the data's original units (normalization inverted).
  Eigen::MatrixXd sample_original(Eigen::Index n, std::uint64_t seed) const;
  // log densities of original-unit points, including the normalization Jacobian.
  Eigen::VectorXd log_density_original(const Eigen::MatrixXd& points) const;
  Eigen::Index n_dims() const { return stats.means.size(); }
};

std::string to_json(const StoredModel& model);
void save_model(const StoredModel& model, const std::string& path);
StoredModel load_model(const std::string& path);

void write_trace_csv(const FitTrace& trace, const std::string& path,
                     const std::string& provenance_comment = "");

// Context echoed into the comparison report so a run is reproducible from the
// report alone.
struct ReportContext {
  std::string command;
  std::string train_path;
  std::string test_path;
  std::vector<std::string> model_paths;
  std::string dataset_label = "dataset";
};

std::string report_to_json(const ComparisonReport& report, const ReportContext& context);
void save_report_json(const ComparisonReport& report, const ReportContext& context,
                      const std::string& path);
// Flat per-(model, sample test) table: one row per model and sample statistic,
// one column per comparison statistic.
void save_report_table_csv(const ComparisonReport& report, const ReportContext& context,
                           const std::string& path);
void save_report_ecdf_csv(const ComparisonReport& report, const ReportContext& context,
                          const std::string& path);

void write_text_file(const std::string& text, const std::string& path);

}  // namespace lookde
