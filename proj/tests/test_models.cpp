#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sepred/channel.hpp"
#include "sepred/errors.hpp"
#include "sepred/features.hpp"
#include "sepred/gbdt.hpp"
#include "sepred/linear.hpp"
#include "sepred/metrics.hpp"
#include "sepred/mimo.hpp"
#include "sepred/mlp.hpp"
#include "sepred/rng.hpp"

using namespace sepred;

namespace {

Eigen::MatrixXd random_matrix(long rows, long cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) m(r, c) = rng.uniform(-2.0, 2.0);
  }
  return m;
}

// Features and SE targets from the ground-truth pipeline, small scale.
void labeled_se_data(Eigen::MatrixXd* x, Eigen::VectorXd* y) {
  const auto objects =
      generate_dataset(ScenarioConfig::urban(70), 120, KSpec::fixed(2));
  *x = build_feature_matrix(objects, FeatureSpec::sorted());
  y->resize(static_cast<long>(objects.size()));
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const ReducedBasis basis = build_reduced_basis(objects[i]);
    const PrecodingMatrix w = precode_zf(basis, kTxAntennas);
    const DetectionSet g =
        detect_all(objects[i], w, basis.layer_counts, DetectorMethod::kMmse);
    (*y)(static_cast<long>(i)) = spectral_efficiency(objects[i], basis, w, g).se_avg;
  }
}

}  // namespace

TEST_CASE("mape closed forms") {
  Eigen::VectorXd t(1), p(1);
  t << 2.0;
  p << 2.0;
  CHECK(mape(p, t) == 0.0);
  p << 1.0;
  CHECK(mape(p, t) == doctest::Approx(0.5));

  Eigen::VectorXd t2(2), p2(2);
  t2 << 1.0, 2.0;
  p2 << 2.0, 1.0;
  CHECK(mape(p2, t2) == doctest::Approx(0.75));
}

TEST_CASE("mape is invariant to joint positive rescaling") {
  Rng rng(80);
  Eigen::VectorXd t(20), p(20);
  for (long i = 0; i < 20; ++i) {
    t(i) = rng.uniform(0.5, 4.0);
    p(i) = rng.uniform(0.5, 4.0);
  }
  const double base = mape(p, t);
  for (double scale : {0.01, 3.0, 1000.0}) {
    CHECK(mape(scale * p, scale * t) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("mape rejects bad input") {
  Eigen::VectorXd t(2), p(3);
  CHECK_THROWS_AS(mape(p, t), ConfigError);
  Eigen::VectorXd t0(2), p0(2);
  t0 << 1.0, 0.0;
  p0 << 1.0, 1.0;
  CHECK_THROWS_AS(mape(p0, t0), NumericError);
}

TEST_CASE("linear model recovers exact affine data") {
  Rng rng(81);
  Eigen::MatrixXd x = random_matrix(60, 1, rng);
  Eigen::VectorXd y = 3.0 * x.col(0).array() + 1.0;

  const LinearModel model = train_linear(x, y, 5);
  CHECK(model.weights(0) == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(model.bias == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("l1 shrinks weights on a permuted-target fit") {
  Rng rng(82);
  Eigen::MatrixXd x = random_matrix(80, 4, rng);
  Eigen::VectorXd y = x * Eigen::Vector4d(2.0, -1.0, 0.5, 3.0);

  const LinearModel informative = train_linear(x, y, 5, 1);
  Eigen::VectorXd shuffled = y;
  for (long i = shuffled.size() - 1; i > 0; --i) {
    std::swap(shuffled(i), shuffled(rng.uniform_index((std::uint64_t)i + 1)));
  }
  const LinearModel noise = train_linear(x, shuffled, 5, 1);

  CHECK(noise.weights.lpNorm<1>() < informative.weights.lpNorm<1>());
  CHECK(noise.l1_strength > informative.l1_strength);
}

TEST_CASE("linear training exposes a monotone objective and a full cv trace") {
  Rng rng(83);
  Eigen::MatrixXd x = random_matrix(50, 3, rng);
  Eigen::VectorXd y =
      (x * Eigen::Vector3d(1.0, -2.0, 0.25)).array() + 0.5;
  for (long i = 0; i < y.size(); ++i) y(i) += 0.01 * rng.gaussian();

  LinearTrainTrace trace;
  train_linear(x, y, 4, 0, &trace);

  REQUIRE(!trace.lambda_grid.empty());
  CHECK(trace.lambda_grid.size() == trace.cv_errors.size());
  for (std::size_t i = 1; i < trace.lambda_grid.size(); ++i) {
    CHECK(trace.lambda_grid[i] < trace.lambda_grid[i - 1]);
  }
  REQUIRE(trace.objective_sweeps.size() >= 2);
  for (std::size_t i = 1; i < trace.objective_sweeps.size(); ++i) {
    CHECK(trace.objective_sweeps[i] <= trace.objective_sweeps[i - 1] + 1e-12);
  }
}

TEST_CASE("linear prediction is an affine map") {
  LinearModel model;
  model.weights = Eigen::Vector3d(1.5, -2.0, 0.5);
  model.bias = 0.75;

  CHECK(predict_linear(model, Eigen::RowVector3d::Zero())(0) ==
        doctest::Approx(0.75));
  for (int j = 0; j < 3; ++j) {
    Eigen::RowVector3d e = Eigen::RowVector3d::Zero();
    e(j) = 1.0;
    CHECK(predict_linear(model, e)(0) ==
          doctest::Approx(model.bias + model.weights(j)));
  }

  Rng rng(84);
  const Eigen::MatrixXd batch = random_matrix(7, 3, rng);
  const Eigen::VectorXd all = predict_linear(model, batch);
  for (long i = 0; i < batch.rows(); ++i) {
    CHECK(all(i) == predict_linear(model, batch.row(i))(0));
  }
  CHECK_THROWS_AS(predict_linear(model, Eigen::RowVector2d::Zero()), ConfigError);
}

TEST_CASE("gbdt on a constant target predicts the constant") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(20, 3);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(20, 4.25);
  GbdtParams params;
  params.iterations = 5;
  const GbdtModel model = train_gbdt(x, y, params);
  const Eigen::VectorXd pred = predict_gbdt(model, x);
  for (long i = 0; i < pred.size(); ++i) CHECK(pred(i) == 4.25);
}

TEST_CASE("depth-1 gbdt drives a step function to near-zero error") {
  Rng rng(85);
  Eigen::MatrixXd x(200, 1);
  Eigen::VectorXd y(200);
  for (long i = 0; i < 200; ++i) {
    x(i, 0) = rng.uniform(-1.0, 1.0);
    y(i) = x(i, 0) < 0.0 ? 0.0 : 1.0;
  }
  GbdtParams params;
  params.depth = 1;
  params.iterations = 200;
  params.learning_rate = 0.1;
  params.subsample = 1.0;
  params.l2_leaf_reg = 0.0;

  GbdtTrainStats stats;
  train_gbdt(x, y, params, &stats);
  CHECK(stats.train_mae.back() < 1e-3);
}

TEST_CASE("gbdt beats the constant-median baseline on se data") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  labeled_se_data(&x, &y);

  GbdtParams params;
  params.iterations = 200;
  const GbdtModel model = train_gbdt(x, y, params);
  const double model_mape = mape(predict_gbdt(model, x), y);

  std::vector<double> sorted(y.data(), y.data() + y.size());
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const Eigen::VectorXd baseline =
      Eigen::VectorXd::Constant(y.size(), sorted[sorted.size() / 2]);
  CHECK(model_mape < mape(baseline, y));
}

TEST_CASE("gbdt train error is monotone, exactly or window-smoothed") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  labeled_se_data(&x, &y);

  GbdtParams full;
  full.iterations = 120;
  full.subsample = 1.0;
  GbdtTrainStats stats_full;
  train_gbdt(x, y, full, &stats_full);
  for (std::size_t t = 1; t < stats_full.train_mae.size(); ++t) {
    CHECK(stats_full.train_mae[t] <= stats_full.train_mae[t - 1] + 1e-12);
  }

  GbdtParams sampled;
  sampled.iterations = 120;  // default subsample 0.8
  GbdtTrainStats stats_sub;
  train_gbdt(x, y, sampled, &stats_sub);
  for (std::size_t t = 10; t < stats_sub.train_mae.size(); ++t) {
    double window_max = 0.0;
    for (std::size_t i = t - 10; i < t; ++i) {
      window_max = std::max(window_max, stats_sub.train_mae[i]);
    }
    CHECK(stats_sub.train_mae[t] <= window_max + 1e-12);
  }
}

TEST_CASE("gbdt edge cases and prediction contract") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Random(5);
  CHECK_THROWS_AS(train_gbdt(x, y, GbdtParams{}), ConfigError);  // N < 10

  // Zero trees -> global median; a single manual leaf shifts it.
  GbdtModel manual;
  manual.base_prediction = 2.0;
  manual.num_features = 2;
  CHECK(predict_gbdt(manual, Eigen::RowVector2d::Zero())(0) == 2.0);
  GbdtTree leaf;
  leaf.nodes.push_back(GbdtNode{-1, 0.0, -1, -1, 0.5});
  manual.trees.push_back(leaf);
  CHECK(predict_gbdt(manual, Eigen::RowVector2d::Zero())(0) == 2.5);
  CHECK_THROWS_AS(predict_gbdt(manual, Eigen::RowVector3d::Zero()), ConfigError);

  // Batch equals per-row application, and training is seed-deterministic.
  Rng rng(86);
  Eigen::MatrixXd xt = random_matrix(40, 3, rng);
  Eigen::VectorXd yt = xt.col(0).array().sin() + xt.col(2).array();
  GbdtParams params;
  params.iterations = 30;
  const GbdtModel a = train_gbdt(xt, yt, params);
  const GbdtModel b = train_gbdt(xt, yt, params);
  const Eigen::VectorXd batch = predict_gbdt(a, xt);
  for (long i = 0; i < 10; ++i) {
    CHECK(batch(i) == predict_gbdt(a, xt.row(i))(0));
    CHECK(batch(i) == predict_gbdt(b, xt.row(i))(0));
  }
}

TEST_CASE("mlp memorizes a tiny normalized dataset") {
  Rng rng(87);
  Eigen::MatrixXd x = random_matrix(10, 3, rng);
  Eigen::VectorXd y(10);
  for (long i = 0; i < 10; ++i) {
    y(i) = std::sin(x(i, 0)) + 0.5 * x(i, 1) * x(i, 2);
  }
  const NormalizationStats stats = fit_normalizer(x, y);
  const Eigen::MatrixXd xn = normalize_features(stats, x);
  const Eigen::VectorXd yn = normalize_targets(stats, y);

  MlpConfig config;
  config.hidden = {32};
  config.epochs = 1000;
  config.dropout_grid = {0.0};
  config.weight_decay_grid = {0.0};
  config.validation_fraction = 0.0;
  config.target_mean = stats.target_mean;
  config.target_std = stats.target_std;

  const MlpModel model = train_mlp(xn, yn, config);
  const Eigen::VectorXd pred = predict_mlp(model, xn);
  CHECK((pred - yn).squaredNorm() / 10.0 < 1e-4);
}

TEST_CASE("mlp analytic gradients match finite differences") {
  Rng rng(88);
  MlpModel model = make_mlp(3, {4}, 99);
  const Eigen::MatrixXd x = random_matrix(5, 3, rng);
  Eigen::VectorXd y(5);
  for (long i = 0; i < 5; ++i) y(i) = rng.uniform(-1.0, 1.0);
  const double wd = 1e-3;
  const double eps = 1e-5;

  const MlpGradients grads = mlp_loss_and_gradient(model, x, y, wd);
  double max_rel = 0.0;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    for (long r = 0; r < model.weights[l].rows(); ++r) {
      for (long c = 0; c < model.weights[l].cols(); ++c) {
        const double saved = model.weights[l](r, c);
        model.weights[l](r, c) = saved + eps;
        const double up = mlp_loss_and_gradient(model, x, y, wd).loss;
        model.weights[l](r, c) = saved - eps;
        const double down = mlp_loss_and_gradient(model, x, y, wd).loss;
        model.weights[l](r, c) = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double analytic = grads.d_weights[l](r, c);
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        max_rel = std::max(max_rel, std::abs(numeric - analytic) / scale);
      }
    }
    for (long r = 0; r < model.biases[l].size(); ++r) {
      const double saved = model.biases[l](r);
      model.biases[l](r) = saved + eps;
      const double up = mlp_loss_and_gradient(model, x, y, wd).loss;
      model.biases[l](r) = saved - eps;
      const double down = mlp_loss_and_gradient(model, x, y, wd).loss;
      model.biases[l](r) = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = grads.d_biases[l](r);
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
      max_rel = std::max(max_rel, std::abs(numeric - analytic) / scale);
    }
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("degenerate mlp configurations are rejected") {
  MlpConfig config;
  config.dropout_grid = {1.0};
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.dropout_grid = {0.0};
  config.hidden = {};
  CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("mlp prediction is deterministic with dropout disabled") {
  MlpModel model = make_mlp(4, {8}, 7);
  model.dropout_rate = 0.5;  // must be ignored at inference
  Rng rng(89);
  const Eigen::MatrixXd x = random_matrix(6, 4, rng);
  const Eigen::VectorXd a = predict_mlp(model, x);
  const Eigen::VectorXd b = predict_mlp(model, x);
  CHECK(a == b);

  // Zero weights: the output is exactly the final bias.
  for (auto& w : model.weights) w.setZero();
  model.biases.back()(0) = 1.25;
  CHECK(predict_mlp(model, x)(0) == doctest::Approx(1.25));
}
