#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sepred/channel.hpp"

namespace sepred {

enum class FeatureScheme { kDefault, kSorted, kPoly };

struct FeatureSpec {
  FeatureScheme scheme = FeatureScheme::kSorted;
  int poly_degree = 3;  // only meaningful for kPoly
  bool include_susinr = false;
  bool include_sigma2 = false;

  static FeatureSpec defaults() { return {FeatureScheme::kDefault, 0, false, false}; }
  static FeatureSpec sorted() { return {FeatureScheme::kSorted, 0, false, false}; }
  static FeatureSpec poly(int degree) { return {FeatureScheme::kPoly, degree, false, false}; }

  void validate() const;
};

FeatureSpec feature_spec_from_string(const std::string& name);
std::string to_string(FeatureScheme scheme);

// SVD-derived raw features: squared singular values per user and pairwise
// layer correlations |<v_ik, v_jm>|^2 for every ordered user pair i != j.
struct RawFeatures {
  struct PairBlock {
    int user_i = 0;
    int user_j = 0;
    std::vector<double> values;  // L_i * L_j entries, (layer_i, layer_j) order

    double max_value() const;
  };

  std::vector<std::vector<double>> singular_sq;  // per user, descending
  std::vector<PairBlock> correlations;           // (i, j) lexicographic
  double sigma2 = 0.0;
};

RawFeatures extract_raw(const ChannelObject& object);

// User blocks reordered descending by each user's largest s^2; pair blocks
// descending by their max correlation, entries within a block descending.
// Ties keep the original order.
RawFeatures sort_raw(const RawFeatures& raw);

// e_1..e_k of the multiset, via the incremental product-expansion recurrence.
std::vector<double> elementary_symmetric(const std::vector<double>& values,
                                         int k);

double susinr_from_raw(const RawFeatures& raw);

Eigen::VectorXd assemble(const ChannelObject& object, const FeatureSpec& spec);
Eigen::VectorXd assemble_from_raw(const RawFeatures& raw,
                                  const FeatureSpec& spec);

// Per-user variant used for user-wise SE prediction: the chosen user's own
// s^2 block first, then the other users' s^2 and the correlations between the
// chosen user's layers and each other user's layers, arranged per scheme.
Eigen::VectorXd assemble_user_wise(const RawFeatures& raw,
                                   const FeatureSpec& spec, int user_index);

std::vector<std::string> feature_names(const FeatureSpec& spec, int num_users);
std::vector<std::string> user_wise_feature_names(const FeatureSpec& spec,
                                                 int num_users);

// Stacks assemble() over a dataset; throws ConfigError when default/sorted
// features meet a mixed-K dataset.
Eigen::MatrixXd build_feature_matrix(const std::vector<ChannelObject>& objects,
                                     const FeatureSpec& spec);

// Per-feature standardization statistics fitted on the training split.
struct NormalizationStats {
  Eigen::VectorXd feature_mean;  // full feature length
  Eigen::VectorXd feature_std;
  std::vector<int> kept;         // indices of non-constant features
  std::vector<int> dropped;      // constant features, recorded
  double target_mean = 0.0;
  double target_std = 1.0;
};

NormalizationStats fit_normalizer(const Eigen::MatrixXd& features,
                                  const Eigen::VectorXd& targets);

// Forward drops constant columns and standardizes; inverse restores the full
// layout (dropped columns refilled with their recorded means).
Eigen::MatrixXd normalize_features(const NormalizationStats& stats,
                                   const Eigen::MatrixXd& features);
Eigen::MatrixXd denormalize_features(const NormalizationStats& stats,
                                     const Eigen::MatrixXd& normalized);
Eigen::VectorXd normalize_targets(const NormalizationStats& stats,
                                  const Eigen::VectorXd& targets);
Eigen::VectorXd denormalize_targets(const NormalizationStats& stats,
                                    const Eigen::VectorXd& normalized);

}  // namespace sepred
