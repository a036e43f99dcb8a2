#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sepred/features.hpp"

namespace sepred {

// Fully-connected rectifier network trained on normalized features/targets.
// When `has_norm` is set the model carries the dataset statistics and
// predict_mlp accepts raw features, returning original-scale predictions.
struct MlpModel {
  std::vector<Eigen::MatrixXd> weights;  // layer l: (out x in)
  std::vector<Eigen::VectorXd> biases;
  double dropout_rate = 0.0;
  double weight_decay = 0.0;
  NormalizationStats norm;
  bool has_norm = false;

  int input_size() const { return static_cast<int>(weights.front().cols()); }
};

struct MlpConfig {
  std::vector<int> hidden = {200};
  int epochs = 200;
  int batch_size = 32;
  double momentum = 0.9;
  std::vector<double> lr_grid = {1e-2, 1e-3, 1e-4, 1e-5};
  int lr_search_epochs = 25;
  std::vector<double> dropout_grid = {0.0, 0.1, 0.2};
  std::vector<double> weight_decay_grid = {0.0, 1e-4, 1e-3};
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  // Target scale, used only to report validation MAPE on the original scale.
  double target_mean = 0.0;
  double target_std = 1.0;

  void validate() const;
};

struct MlpGradients {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;
};

MlpModel make_mlp(int input_size, const std::vector<int>& hidden,
                  std::uint64_t seed);

// Deterministic forward pass, dropout disabled.
Eigen::VectorXd mlp_forward(const MlpModel& model, const Eigen::MatrixXd& x);

// MSE loss (plus L2 on weights) and its analytic gradients, dropout disabled.
// This is the surface checked against finite differences.
MlpGradients mlp_loss_and_gradient(const MlpModel& model,
                                   const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& y,
                                   double weight_decay);

// SGD with momentum, minibatches of config.batch_size; learning rate chosen
// on the config grid by train MSE, dropout/weight decay by held-out MAPE;
// returns the best-validation checkpoint. Inputs must be normalized.
MlpModel train_mlp(const Eigen::MatrixXd& features,
                   const Eigen::VectorXd& targets, const MlpConfig& config);

Eigen::VectorXd predict_mlp(const MlpModel& model,
                            const Eigen::MatrixXd& features);

}  // namespace sepred
