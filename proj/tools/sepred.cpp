// Command-line front end: dataset generation, labeling, featurization,
// training, evaluation, end-to-end runs, timing benchmarks and model
// comparisons.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sepred/errors.hpp"
#include "sepred/harness.hpp"
#include "sepred/linear.hpp"
#include "sepred/metrics.hpp"

namespace {

using namespace sepred;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

KSpec parse_users(const std::string& arg) {
  KSpec spec;
  std::stringstream ss(arg);
  std::string part;
  while (std::getline(ss, part, ',')) {
    spec.values.push_back(std::stoi(part));
  }
  if (spec.values.empty()) throw ConfigError("empty --users list");
  return spec;
}

ScenarioConfig make_scenario(const std::string& name, std::uint64_t seed) {
  switch (scenario_from_string(name)) {
    case ScenarioKind::kUrbanAnalog: return ScenarioConfig::urban(seed);
    case ScenarioKind::kRuralAnalog: return ScenarioConfig::rural(seed);
    case ScenarioKind::kIid: return ScenarioConfig::iid(seed);
  }
  throw ConfigError("unknown scenario: " + name);
}

// Labels CSV as written by `label`; empty per-user cells (mixed K) are left
// as NaN.
struct LabelsTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    throw IoError("labels csv missing column: " + name);
  }
};

LabelsTable read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for read: " + path.string());
  LabelsTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty labels csv");
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream rs(line);
    while (std::getline(rs, cell, ',')) {
      row.push_back(cell.empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : std::stod(cell));
    }
    while (row.size() < table.header.size()) {
      row.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Spectral-efficiency prediction toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a channel dataset");
  std::string gen_scenario = "urban", gen_users = "4", gen_out;
  std::size_t gen_n = 16000;
  std::uint64_t gen_seed = 0;
  gen->add_option("--scenario", gen_scenario, "urban|rural|iid");
  gen->add_option("--users", gen_users, "fixed K or comma list, e.g. 2,4,8");
  gen->add_option("--n", gen_n, "number of objects");
  gen->add_option("--seed", gen_seed);
  std::uint64_t gen_first = 0;
  gen->add_option("--first", gen_first, "first sample index");
  gen->add_option("--out", gen_out)->required();

  // label
  auto* label = app.add_subcommand("label", "Compute ground-truth SE labels");
  std::string label_in, label_out, label_precoder = "zf", label_detector = "mmse";
  bool label_serial = false;
  label->add_option("--in", label_in)->required();
  label->add_option("--precoder", label_precoder, "zf|mrt");
  label->add_option("--detector", label_detector, "mmse|irc");
  label->add_flag("--serial", label_serial, "disable object-level parallelism");
  label->add_option("--out", label_out)->required();

  // featurize
  auto* feat = app.add_subcommand("featurize", "Extract model features");
  std::string feat_in, feat_labels, feat_scheme = "sorted", feat_out;
  bool feat_susinr = false, feat_sigma2 = false, feat_user_wise = false;
  feat->add_option("--in", feat_in)->required();
  feat->add_option("--labels", feat_labels, "labels csv; adds a target column");
  feat->add_option("--scheme", feat_scheme, "default|sorted|polyK (e.g. poly3)");
  feat->add_flag("--susinr", feat_susinr);
  feat->add_flag("--sigma2", feat_sigma2);
  feat->add_flag("--user-wise", feat_user_wise, "one row per (object, user)");
  feat->add_option("--out", feat_out)->required();

  // train
  auto* train = app.add_subcommand("train", "Train a model on a feature csv");
  std::string train_feats, train_model = "gbdt", train_out;
  std::uint64_t train_seed = 0;
  int train_folds = 5;
  GbdtParams train_gbdt_params;
  MlpConfig train_mlp_config;
  train->add_option("--feats", train_feats)->required();
  train->add_option("--model", train_model, "gbdt|linear|mlp");
  train->add_option("--seed", train_seed);
  train->add_option("--folds", train_folds, "linear model CV folds");
  train->add_option("--iterations", train_gbdt_params.iterations);
  train->add_option("--depth", train_gbdt_params.depth);
  train->add_option("--learning-rate", train_gbdt_params.learning_rate);
  train->add_option("--epochs", train_mlp_config.epochs);
  train->add_option("--out", train_out)->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a model on a feature csv");
  std::string eval_model, eval_feats, eval_report;
  eval->add_option("--model", eval_model)->required();
  eval->add_option("--feats", eval_feats)->required();
  eval->add_option("--report", eval_report)->required();

  // run
  auto* run = app.add_subcommand("run", "Run a full experiment from a config");
  std::string run_config, run_out;
  run->add_option("--config", run_config)->required();
  run->add_option("--out", run_out, "override out_dir from the config");

  // bench
  auto* bench = app.add_subcommand("bench", "Inference vs ground-truth timing");
  std::string bench_scenario = "urban", bench_out;
  BenchmarkConfig bench_config;
  bench->add_option("--scenario", bench_scenario, "urban|rural|iid");
  bench->add_option("--n-train", bench_config.n_train);
  bench->add_option("--n-objects", bench_config.n_objects);
  bench->add_option("--reps", bench_config.repetitions);
  bench->add_option("--seed", bench_config.seed);
  bench->add_option("--iterations", bench_config.gbdt.iterations);
  bench->add_option("--out", bench_out)->required();

  // compare
  auto* compare = app.add_subcommand("compare", "Run several configs, one MAPE row each");
  std::vector<std::string> compare_configs;
  std::string compare_out;
  compare->add_option("--config", compare_configs, "config file, repeatable")
      ->required()
      ->expected(-2);
  compare->add_option("--out", compare_out)->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const ScenarioConfig cfg = make_scenario(gen_scenario, gen_seed);
    const auto objects =
        generate_dataset(cfg, gen_n, parse_users(gen_users), gen_first);
    save_dataset(objects, gen_out);
    std::cout << "wrote " << objects.size() << " objects to " << gen_out << "\n";
    return 0;
  }

  if (label->parsed()) {
    const auto objects = load_dataset(label_in);
    const auto labels =
        label_dataset(objects, precoder_from_string(label_precoder),
                      detector_from_string(label_detector), !label_serial);
    write_labels_csv(labels, objects, label_out);
    std::cout << "labeled " << labels.size() << " objects -> " << label_out << "\n";
    return 0;
  }

  if (feat->parsed()) {
    const auto objects = load_dataset(feat_in);
    FeatureSpec spec = feature_spec_from_string(feat_scheme);
    spec.include_susinr = feat_susinr;
    spec.include_sigma2 = feat_sigma2;
    spec.validate();

    std::optional<LabelsTable> labels;
    if (!feat_labels.empty()) labels = read_labels_csv(feat_labels);

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> targets;
    for (std::size_t i = 0; i < objects.size(); ++i) {
      const RawFeatures raw = extract_raw(objects[i]);
      if (feat_user_wise) {
        for (int k = 0; k < objects[i].num_users(); ++k) {
          rows.push_back(assemble_user_wise(raw, spec, k));
          if (labels) {
            targets.push_back(
                labels->rows.at(i).at(labels->column("se_user_" + std::to_string(k))));
          }
        }
      } else {
        rows.push_back(assemble_from_raw(raw, spec));
        if (labels) targets.push_back(labels->rows.at(i).at(labels->column("se_avg")));
      }
    }
    const long width = rows.front().size();
    Eigen::MatrixXd m(static_cast<long>(rows.size()), width + (labels ? 1 : 0));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != width) {
        throw ConfigError("inconsistent feature width; use a poly scheme for mixed K");
      }
      m.row(static_cast<long>(i)).head(width) = rows[i];
      if (labels) m(static_cast<long>(i), width) = targets[i];
    }
    std::vector<std::string> header =
        feat_user_wise ? user_wise_feature_names(spec, objects.front().num_users())
                       : feature_names(spec, objects.front().num_users());
    if (labels) header.push_back("target");
    write_matrix_csv(header, m, feat_out);
    std::cout << "wrote " << m.rows() << " feature rows -> " << feat_out << "\n";
    return 0;
  }

  if (train->parsed()) {
    auto [header, m] = read_matrix_csv(train_feats);
    if (header.empty() || header.back() != "target") {
      throw ConfigError("training csv must end with a 'target' column");
    }
    const Eigen::MatrixXd x = m.leftCols(m.cols() - 1);
    const Eigen::VectorXd y = m.col(m.cols() - 1);

    ModelVariant model;
    switch (model_family_from_string(train_model)) {
      case ModelFamily::kLinear:
        model = train_linear(x, y, train_folds, train_seed);
        break;
      case ModelFamily::kGbdt: {
        train_gbdt_params.seed = train_seed;
        model = train_gbdt(x, y, train_gbdt_params);
        break;
      }
      case ModelFamily::kMlp: {
        const NormalizationStats norm = fit_normalizer(x, y);
        train_mlp_config.seed = train_seed;
        train_mlp_config.target_mean = norm.target_mean;
        train_mlp_config.target_std = norm.target_std;
        MlpModel mlp = train_mlp(normalize_features(norm, x),
                                 normalize_targets(norm, y), train_mlp_config);
        mlp.norm = norm;
        mlp.has_norm = true;
        model = std::move(mlp);
        break;
      }
    }
    save_model(model, train_out);
    const double train_mape = mape(predict(model, x), y);
    std::printf("train mape %.6f, model -> %s\n", train_mape, train_out.c_str());
    return 0;
  }

  if (eval->parsed()) {
    const ModelVariant model = load_model(eval_model);
    auto [header, m] = read_matrix_csv(eval_feats);
    if (header.empty() || header.back() != "target") {
      throw ConfigError("evaluation csv must end with a 'target' column");
    }
    const Eigen::MatrixXd x = m.leftCols(m.cols() - 1);
    const Eigen::VectorXd y = m.col(m.cols() - 1);
    const Eigen::VectorXd p = predict(model, x);

    Eigen::MatrixXd report(y.size(), 3);
    for (long i = 0; i < y.size(); ++i) {
      report(i, 0) = y(i);
      report(i, 1) = p(i);
      report(i, 2) = std::abs((y(i) - p(i)) / y(i));
    }
    write_matrix_csv({"target", "prediction", "abs_pct_err"}, report, eval_report);
    std::printf("test mape %.6f, report -> %s\n", mape(p, y), eval_report.c_str());
    return 0;
  }

  if (run->parsed()) {
    ExperimentConfig config = parse_experiment_config(run_config);
    if (!run_out.empty()) config.out_dir = run_out;
    const EvalReport report = run_experiment(config);
    std::printf("test mape %.6f over %zu rows\n", report.test_mape,
                report.n_eval_rows);
    for (const auto& [k, v] : report.mape_by_k) {
      std::printf("  K=%d mape %.6f\n", k, v);
    }
    std::printf(
        "per-object ms: ground truth %.4f, preprocessing %.4f, inference %.4f\n",
        report.ground_truth_ms_per_object, report.preprocessing_ms_per_object,
        report.inference_ms_per_object);
    return 0;
  }

  if (bench->parsed()) {
    bench_config.scenario = make_scenario(bench_scenario, bench_config.seed);
    const auto rows = run_benchmark(bench_config);
    write_benchmark_csv(rows, bench_out);
    for (const BenchmarkRow& row : rows) {
      std::printf("%-8s zf %.4f ms  prep %.4f ms  sorted %s ms  poly %.4f ms\n",
                  row.users_label.c_str(), row.zf_ground_truth_ms,
                  row.preprocessing_ms,
                  row.boosting_sorted_ms
                      ? std::to_string(*row.boosting_sorted_ms).c_str()
                      : "-",
                  row.boosting_poly_ms);
    }
    return 0;
  }

  if (compare->parsed()) {
    std::vector<ExperimentConfig> configs;
    for (const std::string& path : compare_configs) {
      configs.push_back(parse_experiment_config(path));
      configs.back().write_artifacts = false;
    }
    const auto reports = compare_models(configs, compare_out);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      std::printf("%s: mape %.6f\n", compare_configs[i].c_str(),
                  reports[i].test_mape);
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
