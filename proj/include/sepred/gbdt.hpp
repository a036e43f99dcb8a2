#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace sepred {

struct GbdtParams {
  int iterations = 1000;
  int depth = 6;
  double learning_rate = 0.03;
  double subsample = 0.8;
  double l2_leaf_reg = 3.0;
  int border_count = 254;  // max split candidates per feature
  int min_data_in_leaf = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Flat node array, root at index 0. Leaf values already include the learning
// rate and the l2 shrinkage.
struct GbdtNode {
  int feature = -1;       // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct GbdtTree {
  std::vector<GbdtNode> nodes;

  double evaluate(const Eigen::RowVectorXd& x) const;
};

struct GbdtModel {
  double base_prediction = 0.0;  // global target median
  int num_features = 0;
  std::vector<GbdtTree> trees;
  GbdtParams params;
};

struct GbdtTrainStats {
  std::vector<double> train_mae;  // after each iteration
};

// Gradient boosting on MAE loss: trees fit the residual signs, leaf values
// are exact median-residual steps shrunk by n/(n + l2) and the learning rate.
GbdtModel train_gbdt(const Eigen::MatrixXd& features,
                     const Eigen::VectorXd& targets, const GbdtParams& params,
                     GbdtTrainStats* stats = nullptr);

Eigen::VectorXd predict_gbdt(const GbdtModel& model,
                             const Eigen::MatrixXd& features);

}  // namespace sepred
