#include "lookde/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace lookde {

namespace {

std::string format_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("cannot serialize a non-finite number");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string escape_json(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

}  // namespace

void JsonWriter::separate() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (!needs_comma_.empty()) {
    if (needs_comma_.back()) out_ += ',';
    needs_comma_.back() = true;
  }
}

JsonWriter& JsonWriter::begin_object() {
  separate();
  out_ += '{';
  needs_comma_.push_back(false);
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  needs_comma_.pop_back();
  out_ += '}';
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  separate();
  out_ += '[';
  needs_comma_.push_back(false);
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  needs_comma_.pop_back();
  out_ += ']';
  return *this;
}

JsonWriter& JsonWriter::key(const std::string& name) {
  separate();
  out_ += '"';
  out_ += escape_json(name);
  out_ += "\":";
  after_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  separate();
  out_ += format_double(v);
  return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v) {
  separate();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(std::uint64_t v) {
  separate();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  separate();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
  separate();
  out_ += '"';
  out_ += escape_json(v);
  out_ += '"';
  return *this;
}

JsonWriter& JsonWriter::value(const Eigen::VectorXd& v) {
  begin_array();
  for (Eigen::Index i = 0; i < v.size(); ++i) value(v[i]);
  return end_array();
}

JsonWriter& JsonWriter::value(const Eigen::MatrixXd& v) {
  begin_array();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    begin_array();
    for (Eigen::Index j = 0; j < v.cols(); ++j) value(v(i, j));
    end_array();
  }
  return end_array();
}

Eigen::MatrixXd StoredModel::sample_original(Eigen::Index n, std::uint64_t seed) const {
  Eigen::MatrixXd drawn =
      kde ? lookde::sample(*kde, n, seed) : gmm_sample(*gmm, n, seed);
  return zscore_invert(drawn, stats);
}

Eigen::VectorXd StoredModel::log_density_original(const Eigen::MatrixXd& points) const {
  const Eigen::MatrixXd transformed = zscore_apply(points, stats);
  Eigen::VectorXd log_p =
      kde ? log_density(*kde, transformed) : gmm_log_density(*gmm, transformed);
  // Change of variables: subtract the log product of the scale factors.
  const double log_jacobian = stats.std_devs.array().log().sum();
  return (log_p.array() - log_jacobian).matrix();
}

namespace {

void write_norm_stats(JsonWriter& w, const StoredModel& model) {
  w.key("norm_stats").begin_object();
  w.key("normalized").value(model.normalized);
  w.key("means").value(model.stats.means);
  w.key("std_devs").value(model.stats.std_devs);
  w.end_object();
}

void write_provenance(JsonWriter& w, const StoredModel& model) {
  const FitProvenance& p = model.provenance;
  w.key("seed_provenance").begin_object();
  w.key("command").value(p.command);
  w.key("seed").value(p.seed);
  w.key("config").begin_object();
  w.key("optimizer").value(p.optimizer);
  w.key("convergence_threshold").value(p.convergence_threshold);
  if (p.optimizer != "gmm-em") w.key("initial_bandwidth").value(p.initial_bandwidth);
  if (p.optimizer == "adam") {
    w.key("learning_rate").value(p.learning_rate);
    w.key("batch_size").value(p.batch_size);
  }
  w.key("max_iterations").value(p.max_iterations);
  w.end_object();
  w.key("status").value(p.status);
  w.key("iterations").value(p.iterations);
  w.end_object();
}

}  // namespace

std::string to_json(const StoredModel& model) {
  if (model.kde.has_value() == model.gmm.has_value()) {
    throw std::invalid_argument("stored model must hold exactly one of kde/gmm");
  }
  JsonWriter w;
  w.begin_object();
  w.key("kind").value(model.kind);
  if (model.kde) {
    w.key("centers").value(model.kde->centers());
    w.key("bandwidths").value(model.kde->bandwidths());
    w.key("weights").value(model.kde->weights());
  } else {
    w.key("weights").value(model.gmm->weights);
    w.key("means").value(model.gmm->means);
    w.key("covariances").begin_array();
    for (const Eigen::MatrixXd& cov : model.gmm->covariances) w.value(cov);
    w.end_array();
    w.key("n_components").value(model.gmm->n_components());
  }
  write_norm_stats(w, model);
  w.key("feature_names").begin_array();
  for (const std::string& name : model.feature_names) w.value(name);
  w.end_array();
  w.key("train_size").value(model.train_size);
  write_provenance(w, model);
  w.end_object();
  return w.str() + "\n";
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void save_model(const StoredModel& model, const std::string& path) {
  write_text_file(to_json(model), path);
}

namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("invalid JSON in " + path + ": " + e.what());
  }
  return doc;
}

const json& require(const json& doc, const char* field, const std::string& path) {
  const auto it = doc.find(field);
  if (it == doc.end()) {
    throw std::runtime_error("model file " + path + " is missing field '" + field + "'");
  }
  return *it;
}

double finite_number(const json& node, const char* field, const std::string& path) {
  if (!node.is_number()) {
    throw std::runtime_error("field '" + std::string(field) + "' in " + path +
                             " must be a number");
  }
  const double v = node.get<double>();
  if (!std::isfinite(v)) {
    throw std::runtime_error("field '" + std::string(field) + "' in " + path +
                             " must be finite");
  }
  return v;
}

Eigen::VectorXd read_vector(const json& node, const char* field, const std::string& path) {
  if (!node.is_array()) {
    throw std::runtime_error("field '" + std::string(field) + "' in " + path +
                             " must be an array");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(node.size()));
  Eigen::Index i = 0;
  for (const json& cell : node) out[i++] = finite_number(cell, field, path);
  return out;
}

Eigen::MatrixXd read_matrix(const json& node, const char* field, const std::string& path) {
  if (!node.is_array() || node.empty()) {
    throw std::runtime_error("field '" + std::string(field) + "' in " + path +
                             " must be a non-empty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(node.size());
  const auto cols = static_cast<Eigen::Index>(node.front().size());
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index i = 0;
  for (const json& row : node) {
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::runtime_error("field '" + std::string(field) + "' in " + path +
                               " has ragged rows");
    }
    Eigen::Index j = 0;
    for (const json& cell : row) out(i, j++) = finite_number(cell, field, path);
    ++i;
  }
  return out;
}

}  // namespace

StoredModel load_model(const std::string& path) {
  const json doc = parse_file(path);
  if (!doc.is_object()) throw std::runtime_error("model file " + path + " is not an object");

  StoredModel model;
  const json& kind_node = require(doc, "kind", path);
  if (!kind_node.is_string()) throw std::runtime_error("field 'kind' must be a string");
  model.kind = kind_node.get<std::string>();

  const json& stats_node = require(doc, "norm_stats", path);
  model.stats.means = read_vector(require(stats_node, "means", path), "means", path);
  model.stats.std_devs =
      read_vector(require(stats_node, "std_devs", path), "std_devs", path);
  model.normalized = require(stats_node, "normalized", path).get<bool>();
  if (model.stats.means.size() != model.stats.std_devs.size()) {
    throw std::runtime_error("norm_stats in " + path + " have mismatched lengths");
  }
  for (Eigen::Index j = 0; j < model.stats.std_devs.size(); ++j) {
    if (!(model.stats.std_devs[j] > 0.0)) {
      throw std::runtime_error("norm_stats in " + path + " contain a non-positive scale");
    }
  }

  if (model.kind == "a-kde" || model.kind == "pi-kde") {
    Eigen::MatrixXd centers = read_matrix(require(doc, "centers", path), "centers", path);
    Eigen::VectorXd bandwidths =
        read_vector(require(doc, "bandwidths", path), "bandwidths", path);
    Eigen::VectorXd weights = read_vector(require(doc, "weights", path), "weights", path);
    try {
      if (model.kind == "a-kde") {
        // Stored uniform weights must match 1/n; construction re-derives them.
        KernelDensityModel kde =
            KernelDensityModel::a_kde(std::move(centers), std::move(bandwidths));
        if (weights.size() != kde.n_kernels() ||
            (weights - kde.weights()).cwiseAbs().maxCoeff() > 1e-15) {
          throw std::invalid_argument("stored weights are not uniform");
        }
        model.kde = std::move(kde);
      } else {
        model.kde = KernelDensityModel::pi_kde(std::move(centers), std::move(bandwidths),
                                               std::move(weights));
      }
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("model file " + path + " is inconsistent: " + e.what());
    }
    if (model.kde->n_dims() != model.stats.means.size()) {
      throw std::runtime_error("model file " + path +
                               ": norm_stats dimension does not match the centers");
    }
  } else if (model.kind == "gmm") {
    GmmModel gmm;
    gmm.weights = read_vector(require(doc, "weights", path), "weights", path);
    gmm.means = read_matrix(require(doc, "means", path), "means", path);
    const json& covs = require(doc, "covariances", path);
    if (!covs.is_array()) throw std::runtime_error("field 'covariances' must be an array");
    for (const json& cov : covs) {
      gmm.covariances.push_back(read_matrix(cov, "covariances", path));
    }
    try {
      validate_gmm(gmm);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("model file " + path + " is inconsistent: " + e.what());
    }
    if (gmm.n_dims() != model.stats.means.size()) {
      throw std::runtime_error("model file " + path +
                               ": norm_stats dimension does not match the means");
    }
    model.gmm = std::move(gmm);
  } else {
    throw std::runtime_error("model file " + path + " has unknown kind '" + model.kind +
                             "' (expected a-kde, pi-kde or gmm)");
  }

  if (const auto it = doc.find("feature_names"); it != doc.end() && it->is_array()) {
    for (const json& name : *it) model.feature_names.push_back(name.get<std::string>());
  }
  if (model.feature_names.empty()) {
    for (Eigen::Index j = 0; j < model.n_dims(); ++j) {
      model.feature_names.push_back("col" + std::to_string(j));
    }
  }
  if (static_cast<Eigen::Index>(model.feature_names.size()) != model.n_dims()) {
    throw std::runtime_error("model file " + path + ": feature_names length mismatch");
  }
  if (const auto it = doc.find("train_size"); it != doc.end()) {
    model.train_size = it->get<Eigen::Index>();
  } else {
    model.train_size = model.kde ? model.kde->n_kernels() : model.gmm->means.rows();
  }

  if (const auto it = doc.find("seed_provenance"); it != doc.end() && it->is_object()) {
    const json& p = *it;
    if (const auto f = p.find("command"); f != p.end()) model.provenance.command = *f;
    if (const auto f = p.find("seed"); f != p.end()) {
      model.provenance.seed = f->get<std::uint64_t>();
    }
    if (const auto f = p.find("status"); f != p.end()) model.provenance.status = *f;
    if (const auto f = p.find("iterations"); f != p.end()) {
      model.provenance.iterations = f->get<int>();
    }
    if (const auto c = p.find("config"); c != p.end() && c->is_object()) {
      if (const auto f = c->find("optimizer"); f != c->end()) {
        model.provenance.optimizer = *f;
      }
    }
  }
  return model;
}

void write_trace_csv(const FitTrace& trace, const std::string& path,
                     const std::string& provenance_comment) {
  std::ostringstream out;
  if (!provenance_comment.empty()) out << "# " << provenance_comment << "\n";
  out << "iteration,loo_mll,min_sigma,max_sigma,seconds\n";
  for (const FitRecord& r : trace.records) {
    out << r.iteration << ',' << format_double(r.loo_mll) << ',' << format_double(r.min_sigma)
        << ',' << format_double(r.max_sigma) << ',' << format_double(r.seconds) << "\n";
  }
  write_text_file(out.str(), path);
}

namespace {

const ScoreSample& find_scores(const ComparisonReport& report, const std::string& entity,
                               const std::string& sample_test) {
  for (const ScoreSample& s : report.baseline) {
    if (s.entity == entity && s.sample_test == sample_test) return s;
  }
  for (const ScoreSample& s : report.model_scores) {
    if (s.entity == entity && s.sample_test == sample_test) return s;
  }
  throw std::logic_error("report is missing scores for " + entity + "/" + sample_test);
}

std::vector<std::string> report_entities(const ComparisonReport& report) {
  std::vector<std::string> entities = {"baseline"};
  for (const ScoreSample& s : report.model_scores) {
    if (std::find(entities.begin(), entities.end(), s.entity) == entities.end()) {
      entities.push_back(s.entity);
    }
  }
  return entities;
}

void write_score_array(JsonWriter& w, const std::vector<double>& scores) {
  w.begin_array();
  for (double v : scores) w.value(v);
  w.end_array();
}

}  // namespace

std::string report_to_json(const ComparisonReport& report, const ReportContext& context) {
  JsonWriter w;
  w.begin_object();

  w.key("config").begin_object();
  w.key("command").value(context.command);
  w.key("dataset_label").value(context.dataset_label);
  w.key("train_path").value(context.train_path);
  w.key("test_path").value(context.test_path);
  w.key("model_paths").begin_array();
  for (const std::string& p : context.model_paths) w.value(p);
  w.end_array();
  w.key("n_mc").value(report.config.n_mc);
  w.key("subsample_ratio").value(report.config.subsample_ratio);
  w.key("subsample_size").value(report.subsample_size);
  w.key("n_model_samples").value(report.config.n_model_samples);
  w.key("master_seed").value(report.config.master_seed);
  w.key("sample_tests").begin_array();
  for (const SampleTest& t : report.config.sample_tests) w.value(t.name());
  w.end_array();
  w.end_object();

  w.key("baseline").begin_object();
  for (const ScoreSample& s : report.baseline) {
    w.key(s.sample_test);
    write_score_array(w, s.scores);
  }
  w.end_object();

  w.key("models").begin_object();
  for (std::size_t i = 0; i < report.model_scores.size(); ++i) {
    const ScoreSample& s = report.model_scores[i];
    if (i == 0 || report.model_scores[i - 1].entity != s.entity) {
      if (i != 0) w.end_object();
      w.key(s.entity).begin_object();
    }
    w.key(s.sample_test);
    write_score_array(w, s.scores);
  }
  if (!report.model_scores.empty()) w.end_object();
  w.end_object();

  w.key("comparison").begin_object();
  {
    std::string open_model;
    std::string open_test;
    bool model_open = false;
    bool test_open = false;
    for (const ComparisonEntry& e : report.entries) {
      if (!model_open || e.model != open_model) {
        if (test_open) w.end_object();
        if (model_open) w.end_object();
        w.key(e.model).begin_object();
        open_model = e.model;
        model_open = true;
        test_open = false;
      }
      if (!test_open || e.sample_test != open_test) {
        if (test_open) w.end_object();
        w.key(e.sample_test).begin_object();
        open_test = e.sample_test;
        test_open = true;
      }
      w.key(e.model_test).value(e.score);
    }
    if (test_open) w.end_object();
    if (model_open) w.end_object();
  }
  w.end_object();

  w.key("ecdf").begin_object();
  for (const std::string& entity : report_entities(report)) {
    w.key(entity).begin_object();
    for (const SampleTest& t : report.config.sample_tests) {
      const Ecdf e = ecdf(find_scores(report, entity, t.name()).scores);
      w.key(t.name()).begin_object();
      w.key("values");
      write_score_array(w, e.values);
      w.key("fractions");
      write_score_array(w, e.fractions);
      w.end_object();
    }
    w.end_object();
  }
  w.end_object();

  w.end_object();
  return w.str() + "\n";
}

void save_report_json(const ComparisonReport& report, const ReportContext& context,
                      const std::string& path) {
  write_text_file(report_to_json(report, context), path);
}

void save_report_table_csv(const ComparisonReport& report, const ReportContext& context,
                           const std::string& path) {
  std::ostringstream out;
  if (!context.command.empty()) out << "# " << context.command << "\n";
  out << "dataset,sample_test,model,ks,cvm,delta_mean\n";
  // entries arrive as consecutive (ks, cvm, delta_mean) triples per pair
  for (std::size_t i = 0; i + 2 < report.entries.size(); i += 3) {
    const ComparisonEntry& ks = report.entries[i];
    const ComparisonEntry& cvm = report.entries[i + 1];
    const ComparisonEntry& dm = report.entries[i + 2];
    out << context.dataset_label << ',' << ks.sample_test << ',' << ks.model << ','
        << format_double(ks.score) << ',' << format_double(cvm.score) << ','
        << format_double(dm.score) << "\n";
  }
  write_text_file(out.str(), path);
}

void save_report_ecdf_csv(const ComparisonReport& report, const ReportContext& context,
                          const std::string& path) {
  std::ostringstream out;
  if (!context.command.empty()) out << "# " << context.command << "\n";
  out << "entity,sample_test,value,fraction\n";
  for (const std::string& entity : report_entities(report)) {
    for (const SampleTest& t : report.config.sample_tests) {
      const Ecdf e = ecdf(find_scores(report, entity, t.name()).scores);
      for (std::size_t k = 0; k < e.values.size(); ++k) {
        out << entity << ',' << t.name() << ',' << format_double(e.values[k]) << ','
            << format_double(e.fractions[k]) << "\n";
      }
    }
  }
  write_text_file(out.str(), path);
}

}  // namespace lookde
