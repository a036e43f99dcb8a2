#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sepred/channel.hpp"
#include "sepred/features.hpp"
#include "sepred/gbdt.hpp"
#include "sepred/mimo.hpp"
#include "sepred/mlp.hpp"
#include "sepred/model_io.hpp"

namespace sepred {

enum class ModelFamily { kLinear, kGbdt, kMlp };
enum class TargetMode { kAverageSe, kUserWiseSe };

ModelFamily model_family_from_string(const std::string& name);
std::string to_string(ModelFamily family);
std::string to_string(PrecoderMethod method);
std::string to_string(DetectorMethod method);
PrecoderMethod precoder_from_string(const std::string& name);
DetectorMethod detector_from_string(const std::string& name);

// Ground-truth label for one object: full SVD -> precoding -> detection ->
// SINR/SE, plus the wall-clock it took.
struct LabeledObject {
  SeReport report;
  double label_ms = 0.0;
};

LabeledObject label_object(const ChannelObject& object, PrecoderMethod precoder,
                           DetectorMethod detector);
std::vector<LabeledObject> label_dataset(const std::vector<ChannelObject>& objects,
                                         PrecoderMethod precoder,
                                         DetectorMethod detector,
                                         bool parallel = true);

struct ExperimentConfig {
  ScenarioConfig scenario;
  KSpec users = KSpec::fixed(4);
  PrecoderMethod precoder = PrecoderMethod::kZf;
  DetectorMethod detector = DetectorMethod::kMmse;
  FeatureSpec features;
  ModelFamily model = ModelFamily::kGbdt;
  GbdtParams gbdt;
  MlpConfig mlp;
  int linear_folds = 5;
  std::size_t n_train = 16000;
  std::size_t n_test = 3600;
  std::uint64_t seed = 0;
  TargetMode target_mode = TargetMode::kAverageSe;
  std::filesystem::path out_dir;
  bool write_artifacts = true;

  void validate() const;
};

// Flat key=value file, '#' comments.
ExperimentConfig parse_experiment_config(const std::filesystem::path& path);

struct EvalReport {
  double test_mape = 0.0;
  std::map<int, double> mape_by_k;        // mixed-K breakdown
  double ground_truth_ms_per_object = 0.0;
  double preprocessing_ms_per_object = 0.0;
  double inference_ms_per_object = 0.0;
  std::size_t n_eval_rows = 0;
};

// Full pipeline: generate, label, featurize, train, evaluate; writes the
// dataset/label/feature/model/report artifacts under config.out_dir.
EvalReport run_experiment(const ExperimentConfig& config);

// In-memory variant that also hands back the trained model.
EvalReport run_experiment(const ExperimentConfig& config, ModelVariant* model_out);

struct BenchmarkRow {
  std::string users_label;                 // "{2}", "{4}", "{8}", "{2,4,8}"
  double zf_ground_truth_ms = 0.0;
  double preprocessing_ms = 0.0;
  std::optional<double> boosting_sorted_ms;  // absent on the mixed-K row
  double boosting_poly_ms = 0.0;
};

struct BenchmarkConfig {
  ScenarioConfig scenario;
  std::size_t n_train = 2000;    // per fixed-K sorted model
  std::size_t n_objects = 200;   // timed objects per row
  int repetitions = 100;         // timing repetitions, median reported
  std::uint64_t seed = 0;
  GbdtParams gbdt;
  int poly_degree = 3;
};

// Trains desk-scale GBDT models (sorted per fixed K, poly over mixed K) and
// measures median per-object wall-clock for ZF ground truth, preprocessing
// and model inference. Single-threaded by design.
std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& config);

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows,
                         const std::filesystem::path& path);

// Runs each config (they must share scenario/users/seed/n_test) and writes
// one MAPE row per config.
std::vector<EvalReport> compare_models(const std::vector<ExperimentConfig>& configs,
                                       const std::filesystem::path& out_csv);

// CSV helpers shared by the harness and the CLI.
void write_labels_csv(const std::vector<LabeledObject>& labels,
                      const std::vector<ChannelObject>& objects,
                      const std::filesystem::path& path);
void write_matrix_csv(const std::vector<std::string>& header,
                      const Eigen::MatrixXd& matrix,
                      const std::filesystem::path& path);
// Reads a numeric CSV with a header row; returns (header, matrix).
std::pair<std::vector<std::string>, Eigen::MatrixXd> read_matrix_csv(
    const std::filesystem::path& path);

}  // namespace sepred
