#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "lookde/dataset.hpp"
#include "lookde/density.hpp"
#include "lookde/model_io.hpp"
#include "lookde/pipeline.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lookde;
using testutil::TempDir;

namespace {

StoredModel stored_kde_fixture() {
  Eigen::MatrixXd centers(3, 2);
  centers << 0.0, 0.1, 1.0, -0.5, 2.0, 0.25;
  Eigen::VectorXd sigmas(3);
  sigmas << 0.5, 1.25, 2.0;
  Eigen::VectorXd weights(3);
  weights << 0.2, 0.3, 0.5;

  StoredModel model;
  model.kind = "pi-kde";
  model.kde = KernelDensityModel::pi_kde(centers, sigmas, weights);
  model.stats.means = Eigen::Vector2d(10.0, -4.0);
  model.stats.std_devs = Eigen::Vector2d(2.0, 0.5);
  model.normalized = true;
  model.feature_names = {"height", "width"};
  model.train_size = 3;
  model.provenance.command = "fit --input data.csv";
  model.provenance.seed = 77;
  model.provenance.optimizer = "em";
  model.provenance.convergence_threshold = 1e-4;
  model.provenance.initial_bandwidth = 0.1;
  model.provenance.max_iterations = 100;
  model.provenance.status = "converged";
  model.provenance.iterations = 12;
  return model;
}

StoredModel stored_gmm_fixture() {
  GmmModel gmm;
  gmm.weights = Eigen::Vector2d(0.4, 0.6);
  gmm.means = Eigen::MatrixXd(2, 2);
  gmm.means << 0.0, 1.0, 3.0, -2.0;
  Eigen::Matrix2d c0, c1;
  c0 << 1.0, 0.2, 0.2, 0.5;
  c1 << 2.0, -0.3, -0.3, 1.5;
  gmm.covariances = {c0, c1};

  StoredModel model;
  model.kind = "gmm";
  model.gmm = gmm;
  model.stats.means = Eigen::Vector2d::Zero();
  model.stats.std_devs = Eigen::Vector2d::Ones();
  model.normalized = false;
  model.feature_names = {"col0", "col1"};
  model.train_size = 50;
  model.provenance.command = "fit --model-kind gmm";
  model.provenance.seed = 3;
  model.provenance.optimizer = "gmm-em";
  model.provenance.convergence_threshold = 1e-4;
  model.provenance.max_iterations = 500;
  model.provenance.status = "converged";
  model.provenance.iterations = 20;
  return model;
}

}  // namespace

TEST_CASE("json writer emits keys in call order with stable formatting") {
  JsonWriter w;
  w.begin_object();
  w.key("name").value("a\"b\\c\nd\te");
  w.key("tenth").value(0.1);
  w.key("count").value(std::int64_t{-3});
  w.key("big").value(std::uint64_t{18446744073709551615ull});
  w.key("flag").value(true);
  w.key("list").begin_array().value(1.5).value("x").end_array();
  w.end_object();
  CHECK(w.str() ==
        "{\"name\":\"a\\\"b\\\\c\\nd\\te\",\"tenth\":0.10000000000000001,"
        "\"count\":-3,\"big\":18446744073709551615,\"flag\":true,"
        "\"list\":[1.5,\"x\"]}");
}

TEST_CASE("json writer escapes control characters and rejects non-finite values") {
  JsonWriter w;
  w.begin_object();
  w.key("ctrl").value(std::string("a\x01z"));
  w.end_object();
  CHECK(w.str() == "{\"ctrl\":\"a\\u0001z\"}");

  JsonWriter bad;
  CHECK_THROWS_AS(bad.value(std::nan("")), std::invalid_argument);
  JsonWriter inf_writer;
  CHECK_THROWS_AS(inf_writer.value(INFINITY), std::invalid_argument);
}

TEST_CASE("kernel model survives a save/load round trip exactly") {
  const TempDir dir("kde-roundtrip");
  const StoredModel original = stored_kde_fixture();
  const std::string path = dir.file("model.json");
  save_model(original, path);

  const StoredModel loaded = load_model(path);
  CHECK(loaded.kind == "pi-kde");
  REQUIRE(loaded.kde.has_value());
  CHECK((loaded.kde->centers() - original.kde->centers()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.kde->bandwidths() - original.kde->bandwidths()).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((loaded.kde->weights() - original.kde->weights()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.stats.means - original.stats.means).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.stats.std_devs - original.stats.std_devs).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loaded.normalized == original.normalized);
  CHECK(loaded.feature_names == original.feature_names);
  CHECK(loaded.train_size == original.train_size);
  CHECK(loaded.provenance.command == original.provenance.command);
  CHECK(loaded.provenance.seed == original.provenance.seed);
  CHECK(loaded.provenance.optimizer == original.provenance.optimizer);
  CHECK(loaded.provenance.status == original.provenance.status);
  CHECK(loaded.provenance.iterations == original.provenance.iterations);

  // saving the loaded model twice gives identical bytes
  const std::string again = dir.file("again.json");
  save_model(loaded, again);
  const std::string twice = dir.file("twice.json");
  save_model(loaded, twice);
  CHECK(testutil::read_file(again) == testutil::read_file(twice));
}

TEST_CASE("gaussian mixture survives a save/load round trip exactly") {
  const TempDir dir("gmm-roundtrip");
  const StoredModel original = stored_gmm_fixture();
  const std::string path = dir.file("model.json");
  save_model(original, path);

  const StoredModel loaded = load_model(path);
  CHECK(loaded.kind == "gmm");
  REQUIRE(loaded.gmm.has_value());
  CHECK((loaded.gmm->weights - original.gmm->weights).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.gmm->means - original.gmm->means).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(loaded.gmm->covariances.size() == 2);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK((loaded.gmm->covariances[j] - original.gmm->covariances[j])
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  CHECK(loaded.normalized == false);
  CHECK(loaded.train_size == 50);
}

TEST_CASE("seventeen significant digits make doubles round-trip losslessly") {
  const TempDir dir("digits");
  StoredModel model = stored_kde_fixture();
  model.kde = model.kde->with_bandwidth(0, 0.1);
  const std::string path = dir.file("model.json");
  save_model(model, path);
  CHECK(testutil::read_file(path).find("0.10000000000000001") != std::string::npos);
  const StoredModel loaded = load_model(path);
  CHECK(loaded.kde->bandwidths()[0] == 0.1);
}

TEST_CASE("loading errors name the offending file and field") {
  const TempDir dir("load-errors");

  CHECK_THROWS_WITH_AS(load_model(dir.file("missing.json")),
                       doctest::Contains("cannot open file"), std::runtime_error);

  const std::string garbled = dir.file("garbled.json");
  testutil::write_file(garbled, "{ not json");
  CHECK_THROWS_WITH_AS(load_model(garbled), doctest::Contains("invalid JSON"),
                       std::runtime_error);

  const std::string incomplete = dir.file("incomplete.json");
  testutil::write_file(incomplete, "{\"kind\":\"a-kde\"}");
  CHECK_THROWS_WITH_AS(load_model(incomplete), doctest::Contains("norm_stats"),
                       std::runtime_error);

  const std::string unknown = dir.file("unknown.json");
  testutil::write_file(unknown,
                       "{\"kind\":\"spline\",\"norm_stats\":{\"normalized\":false,"
                       "\"means\":[0],\"std_devs\":[1]}}");
  CHECK_THROWS_WITH_AS(load_model(unknown), doctest::Contains("unknown kind"),
                       std::runtime_error);

  // a-kde with non-uniform stored weights is corrupt, not a silent pi-kde
  const std::string skewed = dir.file("skewed.json");
  testutil::write_file(
      skewed,
      "{\"kind\":\"a-kde\",\"centers\":[[0],[1]],\"bandwidths\":[1,1],"
      "\"weights\":[0.9,0.1],\"norm_stats\":{\"normalized\":false,\"means\":[0],"
      "\"std_devs\":[1]}}");
  CHECK_THROWS_WITH_AS(load_model(skewed), doctest::Contains("inconsistent"),
                       std::runtime_error);

  const std::string bad_scale = dir.file("bad_scale.json");
  testutil::write_file(
      bad_scale,
      "{\"kind\":\"a-kde\",\"centers\":[[0],[1]],\"bandwidths\":[1,1],"
      "\"weights\":[0.5,0.5],\"norm_stats\":{\"normalized\":true,\"means\":[0],"
      "\"std_devs\":[0]}}");
  CHECK_THROWS_WITH_AS(load_model(bad_scale), doctest::Contains("non-positive scale"),
                       std::runtime_error);
}

TEST_CASE("a minimal stored file gets sensible defaults") {
  const TempDir dir("defaults");
  const std::string path = dir.file("bare.json");
  testutil::write_file(
      path,
      "{\"kind\":\"a-kde\",\"centers\":[[0],[1]],\"bandwidths\":[1,1],"
      "\"weights\":[0.5,0.5],\"norm_stats\":{\"normalized\":false,\"means\":[0],"
      "\"std_devs\":[1]}}");
  const StoredModel loaded = load_model(path);
  CHECK(loaded.feature_names == std::vector<std::string>{"col0"});
  CHECK(loaded.train_size == 2);
  CHECK(loaded.provenance.command.empty());
}

TEST_CASE("stored models evaluate and sample in original units") {
  // single standard kernel in normalized space; original units are x = 2z + 10
  Eigen::MatrixXd center(1, 1);
  center << 0.0;
  StoredModel model;
  model.kind = "a-kde";
  model.kde = KernelDensityModel::a_kde(center, Eigen::VectorXd::Ones(1));
  model.stats.means = Eigen::VectorXd::Constant(1, 10.0);
  model.stats.std_devs = Eigen::VectorXd::Constant(1, 2.0);
  model.normalized = true;
  model.feature_names = {"col0"};
  model.train_size = 1;

  // density of N(10, 4) at its mean: log(1 / (2 sqrt(2 pi)))
  Eigen::MatrixXd at_mean(1, 1);
  at_mean << 10.0;
  const double expected =
      oracle::gaussian_log_pdf(Eigen::VectorXd::Constant(1, 10.0),
                               Eigen::VectorXd::Constant(1, 10.0), 2.0);
  CHECK(model.log_density_original(at_mean)[0] ==
        doctest::Approx(expected).epsilon(1e-14));

  const Eigen::MatrixXd draws = model.sample_original(50000, 9);
  CHECK(draws.col(0).mean() == doctest::Approx(10.0).epsilon(0.01));
  const double var =
      (draws.col(0).array() - draws.col(0).mean()).square().sum() / (50000.0 - 1.0);
  CHECK(var == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("trace files carry provenance plus one row per record") {
  const TempDir dir("trace");
  FitTrace trace;
  trace.records.push_back({0, -97.5, 0.1, 0.1, 0.0});
  trace.records.push_back({1, -2.84, 1.0, 1.0, 0.001});
  trace.status = FitStatus::Converged;
  const std::string path = dir.file("trace.csv");
  write_trace_csv(trace, path, "fit --input data.csv");

  const std::vector<std::string> lines = testutil::read_lines(path);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "# fit --input data.csv");
  CHECK(lines[1] == "iteration,loo_mll,min_sigma,max_sigma,seconds");
  CHECK(lines[2] == "0,-97.5,0.10000000000000001,0.10000000000000001,0");
  CHECK(lines[3].substr(0, 2) == "1,");
}

TEST_CASE("comparison reports serialize deterministically") {
  const Dataset train({oracle::random_points(60, 2, 1200)},
                      {std::vector<std::string>{"a", "b"}});
  const Dataset test({oracle::random_points(40, 2, 1201)},
                     {std::vector<std::string>{"a", "b"}});
  PipelineConfig config;
  config.n_mc = 10;
  config.master_seed = 17;
  const SamplableModel stub{"stub", [](Eigen::Index n, std::uint64_t seed) {
                              return oracle::random_points(
                                  n, 2, static_cast<std::uint32_t>(seed & 0xffff));
                            }};
  const ComparisonReport report = compare_models({stub}, train, test, config);

  ReportContext context;
  context.command = "compare --input train.csv";
  context.train_path = "train.csv";
  context.test_path = "test.csv";
  context.model_paths = {"stub.json"};
  context.dataset_label = "demo";

  const std::string a = report_to_json(report, context);
  const std::string b = report_to_json(report, context);
  CHECK(a == b);
  CHECK(a.find("\"dataset_label\":\"demo\"") != std::string::npos);
  CHECK(a.find("\"n_mc\":10") != std::string::npos);

  const TempDir dir("report");
  const std::string table = dir.file("table.csv");
  save_report_table_csv(report, context, table);
  const std::vector<std::string> table_lines = testutil::read_lines(table);
  // provenance comment, header, one row per (model, sample test)
  REQUIRE(table_lines.size() == 4);
  CHECK(table_lines[1] == "dataset,sample_test,model,ks,cvm,delta_mean");
  CHECK(table_lines[2].substr(0, 9) == "demo,mmd,");

  const std::string curves = dir.file("ecdf.csv");
  save_report_ecdf_csv(report, context, curves);
  const std::vector<std::string> ecdf_lines = testutil::read_lines(curves);
  // (baseline + 1 model) x 2 sample tests x 10 scores, plus comment and header
  REQUIRE(ecdf_lines.size() == 2 + 40);
  CHECK(ecdf_lines[1] == "entity,sample_test,value,fraction");
}

TEST_CASE("stored model serialization rejects ambiguous contents") {
  StoredModel both = stored_kde_fixture();
  both.gmm = stored_gmm_fixture().gmm;
  CHECK_THROWS_AS(to_json(both), std::invalid_argument);
  StoredModel neither;
  CHECK_THROWS_AS(to_json(neither), std::invalid_argument);
}
