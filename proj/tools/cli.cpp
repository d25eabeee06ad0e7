#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lookde/dataset.hpp"
#include "lookde/density.hpp"
#include "lookde/gmm.hpp"
#include "lookde/model_io.hpp"
#include "lookde/pipeline.hpp"
#include "lookde/rng.hpp"
#include "lookde/stats.hpp"
#include "lookde/trainer.hpp"

namespace lookde {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitSingular = 3;

std::string join_command(int argc, const char* const* argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& csv, const std::string& flag) {
  std::vector<double> out;
  for (const std::string& item : split_list(csv)) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "'" + item + "' is not a number");
    }
  }
  if (out.empty()) throw CLI::ValidationError(flag, "empty list");
  return out;
}

Dataset load_input(const std::string& path, const std::string& drop_csv) {
  Dataset data = load_csv_auto(path);
  return drop_columns(data, split_list(drop_csv));
}

std::string model_name_from_path(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

struct FitOptions {
  std::string input;
  std::string model_kind = "a-kde";
  std::string optimizer = "em";
  std::string drop;
  std::string out;
  std::string trace_out;
  std::string match_params;
  std::uint64_t seed = 0;
  double threshold = 1e-4;
  double init_bandwidth = 0.1;
  double lr = 0.01;
  Eigen::Index batch_size = 128;
  int max_iter = 0;  // 0 keeps the per-optimizer default
  Eigen::Index k = 0;
  double gmm_reg = 0.0;
  bool no_normalize = false;
};

int cmd_fit(const FitOptions& opt, const std::string& command, std::ostream& out,
            std::ostream& err) {
  const Dataset raw = load_input(opt.input, opt.drop);
  const bool is_kde = opt.model_kind == "a-kde" || opt.model_kind == "pi-kde";
  if (is_kde && raw.has_duplicate_rows()) {
    err << "error: " << opt.input
        << " contains duplicate rows; leave-one-out training needs distinct points. "
           "Deduplicate the data or add a small jitter first.\n";
    return kExitUsage;
  }

  const NormStats stats = opt.no_normalize ? identity_stats(raw.n_dims()) : zscore_fit(raw);
  const Dataset train = opt.no_normalize ? raw : zscore_apply(raw, stats);

  StoredModel stored;
  stored.kind = opt.model_kind;
  stored.stats = stats;
  stored.normalized = !opt.no_normalize;
  stored.feature_names = raw.feature_names();
  stored.train_size = raw.n_rows();
  stored.provenance.command = command;
  stored.provenance.seed = opt.seed;
  stored.provenance.convergence_threshold = opt.threshold;

  int exit_code = kExitOk;
  if (is_kde) {
    stored.provenance.initial_bandwidth = opt.init_bandwidth;
    KernelDensityModel fitted = KernelDensityModel::a_kde(
        train.values(), Eigen::VectorXd::Constant(train.n_rows(), opt.init_bandwidth));
    FitTrace trace;
    if (opt.optimizer == "em") {
      EmConfig config;
      config.convergence_threshold = opt.threshold;
      config.initial_bandwidth = opt.init_bandwidth;
      config.fit_weights = opt.model_kind == "pi-kde";
      if (opt.max_iter > 0) config.max_iterations = opt.max_iter;
      std::tie(fitted, trace) = fit_em(train, config);
      stored.provenance.optimizer = "em";
      stored.provenance.max_iterations = config.max_iterations;
    } else if (opt.optimizer == "adam") {
      if (opt.model_kind == "pi-kde") {
        err << "error: the adam optimizer trains the unweighted model only; "
               "use --optimizer em for pi-kde\n";
        return kExitUsage;
      }
      AdamConfig config;
      config.convergence_threshold = opt.threshold;
      config.initial_bandwidth = opt.init_bandwidth;
      config.learning_rate = opt.lr;
      config.batch_size = opt.batch_size;
      config.shuffle_seed = derive_seed(opt.seed, "fit-adam");
      if (opt.max_iter > 0) config.max_epochs = opt.max_iter;
      std::tie(fitted, trace) = fit_adam(train, config);
      stored.provenance.optimizer = "adam";
      stored.provenance.learning_rate = opt.lr;
      stored.provenance.batch_size = config.batch_size;
      stored.provenance.max_iterations = config.max_epochs;
    } else {
      err << "error: unknown optimizer '" << opt.optimizer << "' (expected em or adam)\n";
      return kExitUsage;
    }
    stored.kde = std::move(fitted);
    stored.provenance.status = to_string(trace.status);
    stored.provenance.iterations = trace.records.empty()
                                       ? 0
                                       : trace.records.back().iteration;
    if (!opt.trace_out.empty()) write_trace_csv(trace, opt.trace_out, command);
    if (trace.status != FitStatus::Converged) {
      err << "warning: fit stopped at the iteration limit without converging\n";
      exit_code = kExitNotConverged;
    }
    out << "fit " << opt.model_kind << ": n=" << train.n_rows() << " d=" << train.n_dims()
        << " status=" << to_string(trace.status)
        << " iterations=" << stored.provenance.iterations
        << " loo_mll=" << trace.records.back().loo_mll << "\n";
  } else if (opt.model_kind == "gmm") {
    Eigen::Index k = opt.k;
    if (k < 1) {
      if (opt.match_params.empty()) {
        err << "error: gmm needs --k or --match-params {a|pi}\n";
        return kExitUsage;
      }
      if (opt.match_params != "a" && opt.match_params != "pi") {
        err << "error: --match-params expects 'a' or 'pi'\n";
        return kExitUsage;
      }
      k = matched_component_count(
          train.n_rows(), train.n_dims(),
          opt.match_params == "a" ? GmmTarget::A : GmmTarget::Pi);
    }
    GmmConfig config;
    config.convergence_threshold = opt.threshold;
    config.covariance_regularization = opt.gmm_reg;
    if (opt.max_iter > 0) config.max_iterations = opt.max_iter;
    const GmmFitResult result = fit_gmm(train, k, opt.seed, config);
    stored.provenance.optimizer = "gmm-em";
    stored.provenance.max_iterations = config.max_iterations;
    stored.provenance.iterations = result.iterations;
    if (!result.ok()) {
      if (*result.failure == GmmFailure::CovarianceSingular) {
        err << "error: a component covariance became singular at iteration "
            << result.iterations << " (k=" << k
            << "); use fewer components or --gmm-reg to regularize\n";
        return kExitSingular;
      }
      err << "error: GMM did not converge within " << config.max_iterations
          << " iterations\n";
      return kExitNotConverged;
    }
    stored.provenance.status = "converged";
    stored.gmm = *result.model;
    out << "fit gmm: n=" << train.n_rows() << " d=" << train.n_dims() << " k=" << k
        << " iterations=" << result.iterations
        << " log_likelihood=" << result.final_log_likelihood << "\n";
  } else {
    err << "error: unknown model kind '" << opt.model_kind
        << "' (expected a-kde, pi-kde or gmm)\n";
    return kExitUsage;
  }

  save_model(stored, opt.out);
  out << "wrote " << opt.out << "\n";
  return exit_code;
}

struct SampleOptions {
  std::string model;
  std::string out;
  Eigen::Index n = -1;  // -1 means the stored training size
  std::uint64_t seed = 0;
};

int cmd_sample(const SampleOptions& opt, const std::string& command, std::ostream& out,
               std::ostream&) {
  const StoredModel model = load_model(opt.model);
  const Eigen::Index n = opt.n >= 0 ? opt.n : model.train_size;
  const Eigen::MatrixXd drawn =
      model.sample_original(n, derive_seed(opt.seed, "cli-sample"));
  write_csv(Dataset(drawn, model.feature_names), opt.out, command);
  out << "wrote " << n << " samples to " << opt.out << "\n";
  return kExitOk;
}

struct EvalOptions {
  std::string model;
  std::string input;
  std::string drop;
  std::string out;
};

int cmd_eval(const EvalOptions& opt, const std::string& command, std::ostream& out,
             std::ostream&) {
  const StoredModel model = load_model(opt.model);
  const Dataset data = load_input(opt.input, opt.drop);
  if (data.n_dims() != model.n_dims()) {
    throw std::runtime_error("data has " + std::to_string(data.n_dims()) +
                             " columns but the model expects " +
                             std::to_string(model.n_dims()));
  }
  const Eigen::VectorXd log_p = model.log_density_original(data.values());
  const double total = log_p.sum();
  const double mean = total / static_cast<double>(data.n_rows());

  JsonWriter w;
  w.begin_object();
  w.key("command").value(command);
  w.key("model").value(opt.model);
  w.key("input").value(opt.input);
  w.key("n").value(data.n_rows());
  w.key("total_log_likelihood").value(total);
  w.key("mean_log_likelihood").value(mean);
  w.end_object();
  const std::string text = w.str() + "\n";
  if (!opt.out.empty()) write_text_file(text, opt.out);
  out << text;
  return kExitOk;
}

struct CompareOptions {
  std::string train;
  std::string test;
  std::vector<std::string> models;
  std::string drop;
  std::string out;
  std::string table_out;
  std::string ecdf_out;
  std::string dataset_label = "dataset";
  int n_mc = 2000;
  double ratio = 0.5;
  Eigen::Index n_model_samples = 0;
  std::uint64_t seed = 0;
  double mmd_bandwidth = 0.0;  // 0 keeps the median heuristic
};

int cmd_compare(const CompareOptions& opt, const std::string& command, std::ostream& out,
                std::ostream& err) {
  const Dataset train = load_input(opt.train, opt.drop);
  const Dataset test = load_input(opt.test, opt.drop);
  if (train.n_dims() != test.n_dims()) {
    throw std::runtime_error("train and test column counts differ");
  }
  const Eigen::Index overlap = row_overlap_count(test.values(), train.values());
  if (overlap > 0) {
    err << "warning: " << overlap
        << " test rows also appear in the training set; baseline scores will be "
           "optimistic\n";
  }

  PipelineConfig config;
  config.n_mc = opt.n_mc;
  config.subsample_ratio = opt.ratio;
  config.n_model_samples = opt.n_model_samples;
  config.master_seed = opt.seed;
  if (opt.mmd_bandwidth > 0.0) {
    config.sample_tests = {SampleTest::mmd_fixed(opt.mmd_bandwidth), SampleTest::energy()};
  }

  std::vector<SamplableModel> samplers;
  std::vector<std::string> names;
  for (const std::string& path : opt.models) {
    std::string name = model_name_from_path(path);
    while (std::find(names.begin(), names.end(), name) != names.end()) name += "+";
    names.push_back(name);
    const StoredModel stored = load_model(path);
    if (stored.n_dims() != train.n_dims()) {
      throw std::runtime_error("model " + path + " expects " +
                               std::to_string(stored.n_dims()) + " columns but the data has " +
                               std::to_string(train.n_dims()));
    }
    samplers.push_back({name, [stored](Eigen::Index n, std::uint64_t seed) {
                          return stored.sample_original(n, seed);
                        }});
  }

  const ComparisonReport report = compare_models(samplers, train, test, config);

  ReportContext context;
  context.command = command;
  context.train_path = opt.train;
  context.test_path = opt.test;
  context.model_paths = opt.models;
  context.dataset_label = opt.dataset_label;
  save_report_json(report, context, opt.out);
  out << "wrote " << opt.out << "\n";
  if (!opt.table_out.empty()) {
    save_report_table_csv(report, context, opt.table_out);
    out << "wrote " << opt.table_out << "\n";
  }
  if (!opt.ecdf_out.empty()) {
    save_report_ecdf_csv(report, context, opt.ecdf_out);
    out << "wrote " << opt.ecdf_out << "\n";
  }
  return kExitOk;
}

struct CollapseOptions {
  std::string input;
  std::string drop;
  std::string out;
  std::string sigmas = "1e-1,1e-2,1e-3,1e-4,1e-5,1e-6,1e-7,1e-8";
  double base_sigma = 1.0;
  Eigen::Index j = 0;
  bool no_normalize = false;
};

int cmd_collapse_demo(const CollapseOptions& opt, const std::string& command,
                      std::ostream& out, std::ostream& err) {
  const Dataset raw = load_input(opt.input, opt.drop);
  if (raw.has_duplicate_rows()) {
    err << "error: " << opt.input
        << " contains duplicate rows; the leave-one-out bound is undefined there\n";
    return kExitUsage;
  }
  const NormStats stats = opt.no_normalize ? identity_stats(raw.n_dims()) : zscore_fit(raw);
  const Dataset data = opt.no_normalize ? raw : zscore_apply(raw, stats);
  const std::vector<double> sigmas = parse_double_list(opt.sigmas, "--sigmas");

  const KernelDensityModel model = KernelDensityModel::a_kde(
      data.values(), Eigen::VectorXd::Constant(data.n_rows(), opt.base_sigma));
  const std::vector<CollapsePoint> curve =
      collapse_curve(model, data.values(), opt.j, sigmas);
  const double bound = loo_upper_bound(data.values());

  std::ostringstream text;
  text << "# " << command << "\n";
  text << "sigma,total_mll,loo_mll,loo_bound\n";
  char buf[32];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const CollapsePoint& p : curve) {
    text << fmt(p.sigma) << ',' << fmt(p.total_mll) << ',' << fmt(p.loo_mll) << ','
         << fmt(bound) << "\n";
  }
  write_text_file(text.str(), opt.out);
  out << "wrote " << opt.out << " (" << curve.size() << " bandwidths, component " << opt.j
      << ")\n";
  return kExitOk;
}

struct SplitOptions {
  std::string input;
  std::string drop;
  std::string out_train;
  std::string out_test;
  double fraction = 0.8;
  std::uint64_t seed = 0;
};

int cmd_split(const SplitOptions& opt, const std::string& command, std::ostream& out,
              std::ostream&) {
  const Dataset data = load_input(opt.input, opt.drop);
  const auto [train, test] = train_test_split(data, SplitSpec{opt.fraction, opt.seed});
  write_csv(train, opt.out_train, command);
  write_csv(test, opt.out_test, command);
  out << "wrote " << train.n_rows() << " rows to " << opt.out_train << " and "
      << test.n_rows() << " rows to " << opt.out_test << "\n";
  return kExitOk;
}

struct SpeedGridOptions {
  std::string input;
  std::string drop;
  std::string out;
  std::string batch_sizes = "128,256,512,1024";
  std::string lrs = "0.01,0.05,0.1";
  std::uint64_t seed = 0;
  double threshold = 1e-4;
  int max_epochs = 2000;
};

// Wall-clock comparison of the fixed-point trainer against the stochastic one
// across a batch-size/learning-rate grid. Timings are machine-dependent; the
// table is meant for qualitative inspection.
int cmd_speed_grid(const SpeedGridOptions& opt, const std::string& command,
                   std::ostream& out, std::ostream& err) {
  const Dataset raw = load_input(opt.input, opt.drop);
  if (raw.has_duplicate_rows()) {
    err << "error: " << opt.input << " contains duplicate rows\n";
    return kExitUsage;
  }
  const NormStats stats = zscore_fit(raw);
  const Dataset train = zscore_apply(raw, stats);

  std::ostringstream text;
  text << "# " << command << "\n";
  text << "optimizer,batch_size,learning_rate,status,iterations,seconds,loo_mll\n";
  char buf[32];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };

  EmConfig em_config;
  em_config.convergence_threshold = opt.threshold;
  const auto [em_model, em_trace] = fit_em(train, em_config);
  (void)em_model;
  text << "em,,," << to_string(em_trace.status) << ',' << em_trace.records.back().iteration
       << ',' << fmt(em_trace.records.back().seconds) << ','
       << fmt(em_trace.records.back().loo_mll) << "\n";

  for (const double batch : parse_double_list(opt.batch_sizes, "--batch-sizes")) {
    for (const double lr : parse_double_list(opt.lrs, "--lrs")) {
      AdamConfig config;
      config.convergence_threshold = opt.threshold;
      config.batch_size = static_cast<Eigen::Index>(batch);
      config.learning_rate = lr;
      config.max_epochs = opt.max_epochs;
      config.shuffle_seed = derive_seed(opt.seed, "speed-grid");
      const auto [model, trace] = fit_adam(train, config);
      (void)model;
      text << "adam," << static_cast<long>(batch) << ',' << fmt(lr) << ','
           << to_string(trace.status) << ',' << trace.records.back().iteration << ','
           << fmt(trace.records.back().seconds) << ',' << fmt(trace.records.back().loo_mll)
           << "\n";
    }
  }
  write_text_file(text.str(), opt.out);
  out << "wrote " << opt.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const std::string command = join_command(argc, argv);

  CLI::App app{"Kernel density estimation trained on the leave-one-out likelihood"};
  app.require_subcommand(1);

  FitOptions fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a density model to a CSV dataset");
  fit_cmd->add_option("--input", fit.input, "training CSV")->required();
  fit_cmd->add_option("--model-kind", fit.model_kind, "a-kde, pi-kde or gmm");
  fit_cmd->add_option("--optimizer", fit.optimizer, "em or adam (kernel models)");
  fit_cmd->add_option("--seed", fit.seed, "master seed");
  fit_cmd->add_option("--threshold", fit.threshold, "convergence threshold per point");
  fit_cmd->add_option("--init-bandwidth", fit.init_bandwidth, "initial bandwidth");
  fit_cmd->add_option("--lr", fit.lr, "adam learning rate");
  fit_cmd->add_option("--batch-size", fit.batch_size, "adam minibatch size");
  fit_cmd->add_option("--max-iter", fit.max_iter, "iteration/epoch limit");
  fit_cmd->add_option("--k", fit.k, "GMM component count");
  fit_cmd->add_option("--match-params", fit.match_params,
                      "derive the GMM component count from a kernel model's: a or pi");
  fit_cmd->add_option("--gmm-reg", fit.gmm_reg, "diagonal covariance regularization");
  fit_cmd->add_option("--drop-columns", fit.drop, "comma-separated columns to drop");
  fit_cmd->add_flag("--no-normalize", fit.no_normalize, "skip z-score normalization");
  fit_cmd->add_option("--out", fit.out, "model JSON path")->required();
  fit_cmd->add_option("--trace", fit.trace_out, "per-iteration trace CSV path");

  SampleOptions sample;
  CLI::App* sample_cmd = app.add_subcommand("sample", "Draw samples from a stored model");
  sample_cmd->add_option("--model", sample.model, "model JSON")->required();
  sample_cmd->add_option("--n", sample.n, "sample count (default: training size)");
  sample_cmd->add_option("--seed", sample.seed, "sampling seed");
  sample_cmd->add_option("--out", sample.out, "output CSV")->required();

  EvalOptions eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Log-likelihood of a dataset under a stored model");
  eval_cmd->add_option("--model", eval.model, "model JSON")->required();
  eval_cmd->add_option("--input", eval.input, "evaluation CSV")->required();
  eval_cmd->add_option("--drop-columns", eval.drop, "comma-separated columns to drop");
  eval_cmd->add_option("--out", eval.out, "also write the result JSON here");

  CompareOptions compare;
  CLI::App* compare_cmd =
      app.add_subcommand("compare", "Monte-Carlo comparison of stored models");
  compare_cmd->add_option("--input", compare.train, "training CSV")->required();
  compare_cmd->add_option("--test", compare.test, "held-out CSV")->required();
  compare_cmd->add_option("--models", compare.models, "model JSON paths")
      ->required()
      ->expected(1, -1);
  compare_cmd->add_option("--n-mc", compare.n_mc, "Monte-Carlo iterations");
  compare_cmd->add_option("--ratio", compare.ratio, "subsample ratio of the test set");
  compare_cmd->add_option("--n-model-samples", compare.n_model_samples,
                          "model draw size (default: training rows)");
  compare_cmd->add_option("--seed", compare.seed, "master seed");
  compare_cmd->add_option("--mmd-bandwidth", compare.mmd_bandwidth,
                          "fixed MMD kernel bandwidth (default: median heuristic)");
  compare_cmd->add_option("--drop-columns", compare.drop, "comma-separated columns to drop");
  compare_cmd->add_option("--dataset-label", compare.dataset_label,
                          "label used in the table CSV");
  compare_cmd->add_option("--out", compare.out, "report JSON path")->required();
  compare_cmd->add_option("--table", compare.table_out, "flat comparison table CSV");
  compare_cmd->add_option("--ecdf", compare.ecdf_out, "score ECDF CSV");

  CollapseOptions collapse;
  CLI::App* collapse_cmd = app.add_subcommand(
      "collapse-demo",
      "Shrink one bandwidth and record both objectives: the total likelihood diverges, "
      "the leave-one-out one stays below its bound");
  collapse_cmd->add_option("--input", collapse.input, "CSV dataset")->required();
  collapse_cmd->add_option("--j", collapse.j, "index of the component to shrink");
  collapse_cmd->add_option("--sigmas", collapse.sigmas,
                           "descending comma-separated bandwidth grid");
  collapse_cmd->add_option("--base-sigma", collapse.base_sigma,
                           "bandwidth of the untouched components");
  collapse_cmd->add_option("--drop-columns", collapse.drop,
                           "comma-separated columns to drop");
  collapse_cmd->add_flag("--no-normalize", collapse.no_normalize,
                         "skip z-score normalization");
  collapse_cmd->add_option("--out", collapse.out, "curve CSV path")->required();

  SplitOptions split;
  CLI::App* split_cmd = app.add_subcommand("split", "Seeded train/test split of a CSV");
  split_cmd->add_option("--input", split.input, "CSV dataset")->required();
  split_cmd->add_option("--fraction", split.fraction, "training fraction");
  split_cmd->add_option("--seed", split.seed, "shuffle seed");
  split_cmd->add_option("--drop-columns", split.drop, "comma-separated columns to drop");
  split_cmd->add_option("--out-train", split.out_train, "training CSV path")->required();
  split_cmd->add_option("--out-test", split.out_test, "test CSV path")->required();

  SpeedGridOptions grid;
  CLI::App* grid_cmd = app.add_subcommand(
      "speed-grid", "Time the fixed-point trainer against adam over a parameter grid");
  grid_cmd->add_option("--input", grid.input, "training CSV")->required();
  grid_cmd->add_option("--batch-sizes", grid.batch_sizes, "comma-separated batch sizes");
  grid_cmd->add_option("--lrs", grid.lrs, "comma-separated learning rates");
  grid_cmd->add_option("--seed", grid.seed, "shuffle seed");
  grid_cmd->add_option("--threshold", grid.threshold, "convergence threshold per point");
  grid_cmd->add_option("--max-epochs", grid.max_epochs, "adam epoch limit");
  grid_cmd->add_option("--drop-columns", grid.drop, "comma-separated columns to drop");
  grid_cmd->add_option("--out", grid.out, "table CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      // --help and friends print through CLI11's own machinery.
      return app.exit(e, out, err);
    }
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, command, out, err);
    if (sample_cmd->parsed()) return cmd_sample(sample, command, out, err);
    if (eval_cmd->parsed()) return cmd_eval(eval, command, out, err);
    if (compare_cmd->parsed()) return cmd_compare(compare, command, out, err);
    if (collapse_cmd->parsed()) return cmd_collapse_demo(collapse, command, out, err);
    if (split_cmd->parsed()) return cmd_split(split, command, out, err);
    if (grid_cmd->parsed()) return cmd_speed_grid(grid, command, out, err);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << "error: no subcommand given\n";
  return kExitUsage;
}

}  // namespace lookde
