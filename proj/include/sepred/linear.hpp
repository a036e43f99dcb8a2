#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace sepred {

// L1-regularized linear predictor on raw (unstandardized) features; the
// internal standardization used during fitting is folded into weights/bias.
struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double l1_strength = 0.0;  // selected by cross-validation
};

// Objective value after each coordinate-descent sweep of the final fit, for
// the monotonicity property test, plus the CV trace over the lambda grid.
struct LinearTrainTrace {
  std::vector<double> objective_sweeps;
  std::vector<double> lambda_grid;
  std::vector<double> cv_errors;
};

// Coordinate-descent lasso with the penalty picked on a logarithmic grid by
// k-fold cross-validated squared error.
LinearModel train_linear(const Eigen::MatrixXd& features,
                         const Eigen::VectorXd& targets, int folds,
                         std::uint64_t seed = 0,
                         LinearTrainTrace* trace = nullptr);

Eigen::VectorXd predict_linear(const LinearModel& model,
                               const Eigen::MatrixXd& features);

}  // namespace sepred
