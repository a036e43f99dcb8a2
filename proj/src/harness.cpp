#include "sepred/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "sepred/errors.hpp"
#include "sepred/linear.hpp"
#include "sepred/metrics.hpp"
#include "sepred/parallel.hpp"

namespace sepred {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double median_of(std::vector<double> values) {
  auto mid = values.begin() + static_cast<long>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

// Fixed "%.17g" keeps report files byte-identical across runs.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean value: " + v);
}

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> names;  // feature columns
  std::vector<int> k_per_row;
};

Design build_design(const std::vector<ChannelObject>& objects,
                    const std::vector<LabeledObject>& labels,
                    const FeatureSpec& spec, TargetMode mode) {
  if (spec.scheme != FeatureScheme::kPoly) {
    const int k0 = objects.front().num_users();
    for (const auto& obj : objects) {
      if (obj.num_users() != k0) {
        throw ConfigError("default/sorted features require fixed K");
      }
    }
  }

  Design design;
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> targets;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const RawFeatures raw = extract_raw(objects[i]);
    if (mode == TargetMode::kAverageSe) {
      rows.push_back(assemble_from_raw(raw, spec));
      targets.push_back(labels[i].report.se_avg);
      design.k_per_row.push_back(objects[i].num_users());
    } else {
      for (int k = 0; k < objects[i].num_users(); ++k) {
        rows.push_back(assemble_user_wise(raw, spec, k));
        targets.push_back(labels[i].report.se_user[k]);
        design.k_per_row.push_back(objects[i].num_users());
      }
    }
  }
  design.x.resize(static_cast<long>(rows.size()), rows.front().size());
  design.y.resize(static_cast<long>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != design.x.cols()) {
      throw ConfigError("inconsistent feature width across dataset");
    }
    design.x.row(static_cast<long>(i)) = rows[i];
    design.y(static_cast<long>(i)) = targets[i];
  }
  design.names = mode == TargetMode::kAverageSe
                     ? feature_names(spec, objects.front().num_users())
                     : user_wise_feature_names(spec, objects.front().num_users());
  return design;
}

ModelVariant train_model(const ExperimentConfig& config, const Design& train) {
  switch (config.model) {
    case ModelFamily::kLinear:
      return train_linear(train.x, train.y, config.linear_folds, config.seed);
    case ModelFamily::kGbdt: {
      GbdtParams params = config.gbdt;
      params.seed = config.seed;
      return train_gbdt(train.x, train.y, params);
    }
    case ModelFamily::kMlp: {
      const NormalizationStats norm = fit_normalizer(train.x, train.y);
      MlpConfig mlp = config.mlp;
      mlp.seed = config.seed;
      mlp.target_mean = norm.target_mean;
      mlp.target_std = norm.target_std;
      MlpModel model = train_mlp(normalize_features(norm, train.x),
                                 normalize_targets(norm, train.y), mlp);
      model.norm = norm;
      model.has_norm = true;
      return model;
    }
  }
  throw ConfigError("bad model family");
}

}  // namespace

ModelFamily model_family_from_string(const std::string& name) {
  if (name == "linear") return ModelFamily::kLinear;
  if (name == "gbdt") return ModelFamily::kGbdt;
  if (name == "mlp") return ModelFamily::kMlp;
  throw ConfigError("unknown model family: " + name);
}

std::string to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::kLinear: return "linear";
    case ModelFamily::kGbdt: return "gbdt";
    case ModelFamily::kMlp: return "mlp";
  }
  return "?";
}

std::string to_string(PrecoderMethod method) {
  return method == PrecoderMethod::kZf ? "zf" : "mrt";
}

std::string to_string(DetectorMethod method) {
  return method == DetectorMethod::kMmse ? "mmse" : "irc";
}

PrecoderMethod precoder_from_string(const std::string& name) {
  if (name == "zf") return PrecoderMethod::kZf;
  if (name == "mrt") return PrecoderMethod::kMrt;
  throw ConfigError("unknown precoder: " + name);
}

DetectorMethod detector_from_string(const std::string& name) {
  if (name == "mmse") return DetectorMethod::kMmse;
  if (name == "irc" || name == "mmse_irc") return DetectorMethod::kMmseIrc;
  throw ConfigError("unknown detector: " + name);
}

LabeledObject label_object(const ChannelObject& object, PrecoderMethod precoder,
                           DetectorMethod detector) {
  const auto start = Clock::now();
  const ReducedBasis basis = build_reduced_basis(object);
  const PrecodingMatrix w = precoder == PrecoderMethod::kZf
                                ? precode_zf(basis, kTxAntennas)
                                : precode_mrt(basis, kTxAntennas);
  const DetectionSet g =
      detect_all(object, w, basis.layer_counts,
                 detector == DetectorMethod::kMmse ? DetectorMethod::kMmse
                                                   : DetectorMethod::kMmseIrc);
  LabeledObject out;
  out.report = spectral_efficiency(object, basis, w, g);
  out.label_ms = ms_since(start);
  return out;
}

std::vector<LabeledObject> label_dataset(const std::vector<ChannelObject>& objects,
                                         PrecoderMethod precoder,
                                         DetectorMethod detector, bool parallel) {
  std::vector<LabeledObject> labels(objects.size());
  parallel_for(
      objects.size(),
      [&](std::size_t i) { labels[i] = label_object(objects[i], precoder, detector); },
      parallel ? 0 : 1);
  return labels;
}

void ExperimentConfig::validate() const {
  scenario.validate();
  features.validate();
  if (users.values.empty()) throw ConfigError("users must be nonempty");
  if (n_train < 1 || n_test < 1) throw ConfigError("n_train/n_test must be >= 1");
  if (features.scheme != FeatureScheme::kPoly && !users.is_fixed()) {
    throw ConfigError("default/sorted features require a fixed user count");
  }
  if (write_artifacts && out_dir.empty()) {
    throw ConfigError("out_dir is required");
  }
}

ExperimentConfig parse_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());

  ExperimentConfig config;
  bool scenario_set = false;
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("bad config line: " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  if (auto it = kv.find("seed"); it != kv.end()) config.seed = std::stoull(it->second);
  if (auto it = kv.find("scenario"); it != kv.end()) {
    const ScenarioKind kind = scenario_from_string(it->second);
    config.scenario = kind == ScenarioKind::kUrbanAnalog
                          ? ScenarioConfig::urban(config.seed)
                          : kind == ScenarioKind::kRuralAnalog
                                ? ScenarioConfig::rural(config.seed)
                                : ScenarioConfig::iid(config.seed);
    scenario_set = true;
  }
  if (!scenario_set) config.scenario = ScenarioConfig::urban(config.seed);

  for (const auto& [key, value] : kv) {
    if (key == "seed" || key == "scenario") continue;
    if (key == "scenario.num_paths") config.scenario.num_paths = std::stoi(value);
    else if (key == "scenario.angular_spread_deg") config.scenario.angular_spread_deg = std::stod(value);
    else if (key == "scenario.los_probability") config.scenario.los_probability = std::stod(value);
    else if (key == "scenario.path_gain_decay") config.scenario.path_gain_decay = std::stod(value);
    else if (key == "scenario.sigma2_min") config.scenario.sigma2_min = std::stod(value);
    else if (key == "scenario.sigma2_max") config.scenario.sigma2_max = std::stod(value);
    else if (key == "users") {
      config.users.values.clear();
      for (const std::string& part : split(value, ',')) {
        config.users.values.push_back(std::stoi(trim(part)));
      }
    } else if (key == "precoder") config.precoder = precoder_from_string(value);
    else if (key == "detector") config.detector = detector_from_string(value);
    else if (key == "features") {
      const FeatureSpec parsed = feature_spec_from_string(value);
      config.features.scheme = parsed.scheme;
      config.features.poly_degree = parsed.poly_degree;
    } else if (key == "susinr") config.features.include_susinr = parse_bool(value);
    else if (key == "sigma2_feature") config.features.include_sigma2 = parse_bool(value);
    else if (key == "model") config.model = model_family_from_string(value);
    else if (key == "n_train") config.n_train = std::stoull(value);
    else if (key == "n_test") config.n_test = std::stoull(value);
    else if (key == "target_mode") {
      if (value == "average" || value == "average_se") config.target_mode = TargetMode::kAverageSe;
      else if (value == "user_wise" || value == "user_wise_se") config.target_mode = TargetMode::kUserWiseSe;
      else throw ConfigError("unknown target_mode: " + value);
    } else if (key == "out_dir") config.out_dir = value;
    else if (key == "gbdt.iterations") config.gbdt.iterations = std::stoi(value);
    else if (key == "gbdt.depth") config.gbdt.depth = std::stoi(value);
    else if (key == "gbdt.learning_rate") config.gbdt.learning_rate = std::stod(value);
    else if (key == "gbdt.subsample") config.gbdt.subsample = std::stod(value);
    else if (key == "gbdt.l2_leaf_reg") config.gbdt.l2_leaf_reg = std::stod(value);
    else if (key == "mlp.hidden") {
      config.mlp.hidden.clear();
      for (const std::string& part : split(value, ',')) {
        config.mlp.hidden.push_back(std::stoi(trim(part)));
      }
    } else if (key == "mlp.epochs") config.mlp.epochs = std::stoi(value);
    else if (key == "linear.folds") config.linear_folds = std::stoi(value);
    else throw ConfigError("unknown config key: " + key);
  }
  config.scenario.seed = config.seed;
  return config;
}

void write_labels_csv(const std::vector<LabeledObject>& labels,
                      const std::vector<ChannelObject>& objects,
                      const std::filesystem::path& path) {
  int max_k = 0;
  for (const auto& obj : objects) max_k = std::max(max_k, obj.num_users());

  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path.string());
  out << "index,K,sigma2,susinr,se_avg";
  for (int k = 0; k < max_k; ++k) out << ",se_user_" << k;
  out << ",label_ms\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const SeReport& r = labels[i].report;
    out << i << ',' << objects[i].num_users() << ',' << fmt(r.sigma2) << ','
        << fmt(r.susinr) << ',' << fmt(r.se_avg);
    for (int k = 0; k < max_k; ++k) {
      out << ',';
      if (k < static_cast<int>(r.se_user.size())) out << fmt(r.se_user[k]);
    }
    out << ',' << fmt(labels[i].label_ms) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_matrix_csv(const std::vector<std::string>& header,
                      const Eigen::MatrixXd& matrix,
                      const std::filesystem::path& path) {
  if (static_cast<long>(header.size()) != matrix.cols()) {
    throw ConfigError("csv header width mismatch");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path.string());
  for (std::size_t c = 0; c < header.size(); ++c) {
    out << (c == 0 ? "" : ",") << header[c];
  }
  out << '\n';
  for (long r = 0; r < matrix.rows(); ++r) {
    for (long c = 0; c < matrix.cols(); ++c) {
      out << (c == 0 ? "" : ",") << fmt(matrix(r, c));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> read_matrix_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for read: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty csv: " + path.string());
  std::vector<std::string> header = split(trim(line), ',');

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> parts = split(line, ',');
    if (parts.size() != header.size()) {
      throw IoError("ragged csv row in " + path.string());
    }
    std::vector<double> row;
    row.reserve(parts.size());
    for (const std::string& p : parts) row.push_back(std::stod(p));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<long>(rows.size()), static_cast<long>(header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      m(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
    }
  }
  return {std::move(header), std::move(m)};
}

EvalReport run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, nullptr);
}

EvalReport run_experiment(const ExperimentConfig& config,
                          ModelVariant* model_out) {
  config.validate();

  // Disjoint index ranges make the split disjoint by construction.
  const std::vector<ChannelObject> train_objects =
      generate_dataset(config.scenario, config.n_train, config.users, 0);
  const std::vector<ChannelObject> test_objects = generate_dataset(
      config.scenario, config.n_test, config.users, config.n_train);

  const std::vector<LabeledObject> train_labels =
      label_dataset(train_objects, config.precoder, config.detector);
  const std::vector<LabeledObject> test_labels =
      label_dataset(test_objects, config.precoder, config.detector);

  const Design train =
      build_design(train_objects, train_labels, config.features, config.target_mode);
  const Design test =
      build_design(test_objects, test_labels, config.features, config.target_mode);

  ModelVariant model = train_model(config, train);
  const Eigen::VectorXd predictions = predict(model, test.x);

  EvalReport report;
  report.n_eval_rows = static_cast<std::size_t>(test.y.size());
  report.test_mape = mape(predictions, test.y);
  {
    std::map<int, std::vector<long>> by_k;
    for (long i = 0; i < test.y.size(); ++i) by_k[test.k_per_row[i]].push_back(i);
    for (const auto& [k, idx] : by_k) {
      Eigen::VectorXd p(idx.size()), t(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        p(static_cast<long>(i)) = predictions(idx[i]);
        t(static_cast<long>(i)) = test.y(idx[i]);
      }
      report.mape_by_k[k] = mape(p, t);
    }
  }

  // Informational per-object timings, measured serially on a test subset.
  {
    const std::size_t n_timed = std::min<std::size_t>(test_objects.size(), 100);
    std::vector<double> gt_ms, prep_ms, inf_ms;
    for (std::size_t i = 0; i < n_timed; ++i) {
      auto t0 = Clock::now();
      (void)label_object(test_objects[i], config.precoder, config.detector);
      gt_ms.push_back(ms_since(t0));
      t0 = Clock::now();
      (void)assemble(test_objects[i], config.features);
      prep_ms.push_back(ms_since(t0));
      t0 = Clock::now();
      (void)predict(model, test.x.row(static_cast<long>(i)));
      inf_ms.push_back(ms_since(t0));
    }
    report.ground_truth_ms_per_object = median_of(std::move(gt_ms));
    report.preprocessing_ms_per_object = median_of(std::move(prep_ms));
    report.inference_ms_per_object = median_of(std::move(inf_ms));
  }

  if (config.write_artifacts) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    save_dataset(train_objects, config.out_dir / "train.seds");
    save_dataset(test_objects, config.out_dir / "test.seds");
    write_labels_csv(train_labels, train_objects, config.out_dir / "labels_train.csv");
    write_labels_csv(test_labels, test_objects, config.out_dir / "labels_test.csv");

    auto with_target = [](const Design& d) {
      Eigen::MatrixXd m(d.x.rows(), d.x.cols() + 1);
      m.leftCols(d.x.cols()) = d.x;
      m.col(d.x.cols()) = d.y;
      return m;
    };
    std::vector<std::string> header = train.names;
    header.push_back("target");
    write_matrix_csv(header, with_target(train), config.out_dir / "feats_train.csv");
    write_matrix_csv(header, with_target(test), config.out_dir / "feats_test.csv");
    save_model(model, config.out_dir / "model.seml");

    Eigen::MatrixXd rows(test.y.size(), 4);
    for (long i = 0; i < test.y.size(); ++i) {
      rows(i, 0) = static_cast<double>(test.k_per_row[i]);
      rows(i, 1) = test.y(i);
      rows(i, 2) = predictions(i);
      rows(i, 3) = std::abs((test.y(i) - predictions(i)) / test.y(i));
    }
    write_matrix_csv({"K", "target", "prediction", "abs_pct_err"}, rows,
                     config.out_dir / "report.csv");

    nlohmann::json manifest;
    manifest["scenario"] = to_string(config.scenario.kind);
    manifest["users"] = config.users.values;
    manifest["precoder"] = to_string(config.precoder);
    manifest["detector"] = to_string(config.detector);
    manifest["features"] = to_string(config.features.scheme);
    if (config.features.scheme == FeatureScheme::kPoly) {
      manifest["poly_degree"] = config.features.poly_degree;
    }
    manifest["susinr"] = config.features.include_susinr;
    manifest["sigma2_feature"] = config.features.include_sigma2;
    manifest["model"] = to_string(config.model);
    manifest["n_train"] = config.n_train;
    manifest["n_test"] = config.n_test;
    manifest["seed"] = config.seed;
    manifest["target_mode"] =
        config.target_mode == TargetMode::kAverageSe ? "average_se" : "user_wise_se";
    manifest["test_mape"] = report.test_mape;
    for (const auto& [k, v] : report.mape_by_k) {
      manifest["mape_by_k"][std::to_string(k)] = v;
    }
    std::ofstream mf(config.out_dir / "manifest.json");
    mf << manifest.dump(2) << '\n';
  }

  if (model_out != nullptr) *model_out = std::move(model);
  return report;
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& config) {
  config.scenario.validate();
  const std::vector<int> fixed_ks = {2, 4, 8};
  const FeatureSpec sorted_spec{FeatureScheme::kSorted, 0, true, false};
  const FeatureSpec poly_spec{FeatureScheme::kPoly, config.poly_degree, true, false};

  // Desk-scale GBDT models: one sorted model per fixed K, one poly model on
  // the mixed train set.
  std::map<int, GbdtModel> sorted_models;
  for (int k : fixed_ks) {
    const auto objects =
        generate_dataset(config.scenario, config.n_train, KSpec::fixed(k), 0);
    const auto labels =
        label_dataset(objects, PrecoderMethod::kZf, DetectorMethod::kMmse);
    const Design d = build_design(objects, labels, sorted_spec, TargetMode::kAverageSe);
    GbdtParams params = config.gbdt;
    params.seed = config.seed;
    sorted_models[k] = train_gbdt(d.x, d.y, params);
  }
  GbdtModel poly_model;
  {
    const auto objects = generate_dataset(config.scenario, config.n_train,
                                          KSpec::mixed({2, 4, 8}), 0);
    const auto labels =
        label_dataset(objects, PrecoderMethod::kZf, DetectorMethod::kMmse);
    const Design d = build_design(objects, labels, poly_spec, TargetMode::kAverageSe);
    GbdtParams params = config.gbdt;
    params.seed = config.seed;
    poly_model = train_gbdt(d.x, d.y, params);
  }

  auto time_row = [&](const KSpec& users, const std::string& label,
                      const GbdtModel* sorted_model) {
    const auto objects = generate_dataset(config.scenario, config.n_objects,
                                          users, 1u << 20);
    const std::size_t m =
        std::max<std::size_t>(objects.size(), config.repetitions);

    std::vector<double> gt_ms, prep_ms, sorted_ms, poly_ms;
    for (std::size_t i = 0; i < m; ++i) {
      const ChannelObject& obj = objects[i % objects.size()];
      auto t0 = Clock::now();
      (void)label_object(obj, PrecoderMethod::kZf, DetectorMethod::kMmse);
      gt_ms.push_back(ms_since(t0));

      const FeatureSpec& prep_spec = sorted_model ? sorted_spec : poly_spec;
      t0 = Clock::now();
      const RawFeatures raw = extract_raw(obj);
      Eigen::VectorXd feats = assemble_from_raw(raw, prep_spec);
      prep_ms.push_back(ms_since(t0));

      if (sorted_model != nullptr) {
        t0 = Clock::now();
        (void)predict_gbdt(*sorted_model, feats.transpose());
        sorted_ms.push_back(ms_since(t0));
      }
      const Eigen::VectorXd poly_feats = assemble_from_raw(raw, poly_spec);
      t0 = Clock::now();
      (void)predict_gbdt(poly_model, poly_feats.transpose());
      poly_ms.push_back(ms_since(t0));
    }

    BenchmarkRow row;
    row.users_label = label;
    row.zf_ground_truth_ms = median_of(std::move(gt_ms));
    row.preprocessing_ms = median_of(std::move(prep_ms));
    if (sorted_model != nullptr) row.boosting_sorted_ms = median_of(std::move(sorted_ms));
    row.boosting_poly_ms = median_of(std::move(poly_ms));
    return row;
  };

  std::vector<BenchmarkRow> rows;
  for (int k : fixed_ks) {
    rows.push_back(time_row(KSpec::fixed(k), "{" + std::to_string(k) + "}",
                            &sorted_models[k]));
  }
  rows.push_back(time_row(KSpec::mixed({2, 4, 8}), "{2,4,8}", nullptr));
  return rows;
}

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path.string());
  out << "users,zf_ground_truth_ms,preprocessing_ms,boosting_sorted_ms,"
         "boosting_poly_ms\n";
  for (const BenchmarkRow& row : rows) {
    out << '"' << row.users_label << "\"," << fmt(row.zf_ground_truth_ms) << ','
        << fmt(row.preprocessing_ms) << ',';
    if (row.boosting_sorted_ms) out << fmt(*row.boosting_sorted_ms);
    out << ',' << fmt(row.boosting_poly_ms) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<EvalReport> compare_models(const std::vector<ExperimentConfig>& configs,
                                       const std::filesystem::path& out_csv) {
  if (configs.size() < 2) throw ConfigError("compare needs at least 2 configs");
  const ExperimentConfig& ref = configs.front();
  for (const ExperimentConfig& c : configs) {
    if (c.scenario.kind != ref.scenario.kind || c.seed != ref.seed ||
        c.users.values != ref.users.values || c.n_train != ref.n_train ||
        c.n_test != ref.n_test || c.precoder != ref.precoder ||
        c.detector != ref.detector || c.target_mode != ref.target_mode) {
      throw ConfigError("compare configs do not share the same test set");
    }
  }

  std::vector<EvalReport> reports;
  std::ofstream out(out_csv);
  if (!out) throw IoError("cannot open for write: " + out_csv.string());
  out << "model,features,precoder,detector,mape\n";
  for (const ExperimentConfig& c : configs) {
    reports.push_back(run_experiment(c));
    std::string feat = to_string(c.features.scheme);
    if (c.features.scheme == FeatureScheme::kPoly) {
      feat += std::to_string(c.features.poly_degree);
    }
    out << to_string(c.model) << ',' << feat << ',' << to_string(c.precoder)
        << ',' << to_string(c.detector) << ',' << fmt(reports.back().test_mape)
        << '\n';
  }
  if (!out) throw IoError("write failed: " + out_csv.string());
  return reports;
}

}  // namespace sepred
