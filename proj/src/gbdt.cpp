#include "sepred/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sepred/errors.hpp"
#include "sepred/rng.hpp"

namespace sepred {
namespace {

constexpr double kMinGain = 1e-12;

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  auto mid = values.begin() + static_cast<long>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(values.begin(), mid);
  return 0.5 * (lo + hi);
}

// Quantile split candidates per feature; thresholds sit between distinct
// observed values so every candidate actually separates samples.
std::vector<double> make_borders(const Eigen::VectorXd& column,
                                 int border_count) {
  std::vector<double> sorted(column.data(), column.data() + column.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct;
  for (double v : sorted) {
    if (distinct.empty() || v > distinct.back()) distinct.push_back(v);
  }
  std::vector<double> borders;
  if (static_cast<int>(distinct.size()) <= border_count + 1) {
    for (std::size_t i = 1; i < distinct.size(); ++i) {
      borders.push_back(0.5 * (distinct[i - 1] + distinct[i]));
    }
    return borders;
  }
  const std::size_t n = sorted.size();
  for (int b = 1; b <= border_count; ++b) {
    const std::size_t idx = b * n / (border_count + 1);
    if (idx == 0 || !(sorted[idx] > sorted[idx - 1])) continue;
    const double mid = 0.5 * (sorted[idx - 1] + sorted[idx]);
    if (borders.empty() || mid > borders.back()) borders.push_back(mid);
  }
  return borders;
}

struct BinnedData {
  std::vector<std::vector<double>> borders;       // per feature
  std::vector<std::vector<std::uint16_t>> bins;   // per feature, per sample
};

// bin(x) = index of the first border >= x, so "x <= borders[b]" is "bin <= b".
std::uint16_t bin_of(const std::vector<double>& borders, double x) {
  return static_cast<std::uint16_t>(
      std::lower_bound(borders.begin(), borders.end(), x) - borders.begin());
}

BinnedData bin_dataset(const Eigen::MatrixXd& x, int border_count) {
  BinnedData data;
  data.borders.resize(x.cols());
  data.bins.resize(x.cols());
  for (long c = 0; c < x.cols(); ++c) {
    data.borders[c] = make_borders(x.col(c), border_count);
    data.bins[c].resize(x.rows());
    for (long r = 0; r < x.rows(); ++r) {
      data.bins[c][r] = bin_of(data.borders[c], x(r, c));
    }
  }
  return data;
}

class TreeBuilder {
 public:
  TreeBuilder(const BinnedData& data, const Eigen::VectorXd& gradient,
              const Eigen::VectorXd& residual, const GbdtParams& params)
      : data_(data), gradient_(gradient), residual_(residual), params_(params) {}

  GbdtTree build(std::vector<int> samples) {
    tree_.nodes.clear();
    grow(std::move(samples), 0);
    return std::move(tree_);
  }

 private:
  int make_leaf(const std::vector<int>& samples) {
    std::vector<double> res;
    res.reserve(samples.size());
    for (int i : samples) res.push_back(residual_(i));
    const double n = static_cast<double>(samples.size());
    GbdtNode node;
    node.value = params_.learning_rate * median(std::move(res)) *
                 (n / (n + params_.l2_leaf_reg));
    tree_.nodes.push_back(node);
    return static_cast<int>(tree_.nodes.size()) - 1;
  }

  int grow(std::vector<int> samples, int depth) {
    if (depth >= params_.depth ||
        static_cast<int>(samples.size()) < 2 * params_.min_data_in_leaf) {
      return make_leaf(samples);
    }

    double total_sum = 0.0;
    for (int i : samples) total_sum += gradient_(i);
    const double total_n = static_cast<double>(samples.size());
    const double base_score = total_sum * total_sum / total_n;

    int best_feature = -1, best_bin = -1;
    double best_gain = kMinGain;
    for (std::size_t c = 0; c < data_.borders.size(); ++c) {
      const std::size_t n_bins = data_.borders[c].size() + 1;
      if (n_bins < 2) continue;
      hist_count_.assign(n_bins, 0);
      hist_sum_.assign(n_bins, 0.0);
      const auto& bins = data_.bins[c];
      for (int i : samples) {
        ++hist_count_[bins[i]];
        hist_sum_[bins[i]] += gradient_(i);
      }
      int left_n = 0;
      double left_sum = 0.0;
      for (std::size_t b = 0; b + 1 < n_bins; ++b) {
        left_n += hist_count_[b];
        left_sum += hist_sum_[b];
        const int right_n = static_cast<int>(samples.size()) - left_n;
        if (left_n < params_.min_data_in_leaf ||
            right_n < params_.min_data_in_leaf) {
          continue;
        }
        const double right_sum = total_sum - left_sum;
        const double gain = left_sum * left_sum / left_n +
                            right_sum * right_sum / right_n - base_score;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(c);
          best_bin = static_cast<int>(b);
        }
      }
    }
    if (best_feature < 0) return make_leaf(samples);

    std::vector<int> left, right;
    const auto& bins = data_.bins[best_feature];
    for (int i : samples) {
      (bins[i] <= best_bin ? left : right).push_back(i);
    }
    samples.clear();
    samples.shrink_to_fit();

    GbdtNode node;
    node.feature = best_feature;
    node.threshold = data_.borders[best_feature][best_bin];
    tree_.nodes.push_back(node);
    const int index = static_cast<int>(tree_.nodes.size()) - 1;
    const int left_index = grow(std::move(left), depth + 1);
    const int right_index = grow(std::move(right), depth + 1);
    tree_.nodes[index].left = left_index;
    tree_.nodes[index].right = right_index;
    return index;
  }

  const BinnedData& data_;
  const Eigen::VectorXd& gradient_;
  const Eigen::VectorXd& residual_;
  const GbdtParams& params_;
  GbdtTree tree_;
  std::vector<int> hist_count_;
  std::vector<double> hist_sum_;
};

}  // namespace

void GbdtParams::validate() const {
  if (iterations < 1) throw ConfigError("gbdt iterations must be >= 1");
  if (depth < 1) throw ConfigError("gbdt depth must be >= 1");
  if (!(learning_rate > 0) || learning_rate > 1) {
    throw ConfigError("gbdt learning_rate must be in (0, 1]");
  }
  if (!(subsample > 0) || subsample > 1) {
    throw ConfigError("gbdt subsample must be in (0, 1]");
  }
  if (l2_leaf_reg < 0) throw ConfigError("gbdt l2_leaf_reg must be >= 0");
  if (border_count < 1 || border_count > 255) {
    throw ConfigError("gbdt border_count must be in [1, 255]");
  }
  if (min_data_in_leaf < 1) throw ConfigError("gbdt min_data_in_leaf must be >= 1");
}

double GbdtTree::evaluate(const Eigen::RowVectorXd& x) const {
  int i = 0;
  while (nodes[i].feature >= 0) {
    i = x(nodes[i].feature) <= nodes[i].threshold ? nodes[i].left
                                                  : nodes[i].right;
  }
  return nodes[i].value;
}

GbdtModel train_gbdt(const Eigen::MatrixXd& features,
                     const Eigen::VectorXd& targets, const GbdtParams& params,
                     GbdtTrainStats* stats) {
  params.validate();
  const long n = features.rows();
  if (n < 10) throw ConfigError("gbdt needs at least 10 samples");
  if (targets.size() != n) throw ConfigError("feature/target size mismatch");
  if (!features.allFinite() || !targets.allFinite()) {
    throw NumericError("non-finite training data");
  }

  GbdtModel model;
  model.params = params;
  model.num_features = static_cast<int>(features.cols());
  model.base_prediction =
      median({targets.data(), targets.data() + targets.size()});
  model.trees.reserve(params.iterations);

  const BinnedData binned = bin_dataset(features, params.border_count);
  Eigen::VectorXd current = Eigen::VectorXd::Constant(n, model.base_prediction);
  Rng rng(params.seed, 0, 0x6bd7ULL);

  for (int it = 0; it < params.iterations; ++it) {
    std::vector<int> sample_indices;
    sample_indices.reserve(n);
    if (params.subsample < 1.0) {
      for (long i = 0; i < n; ++i) {
        if (rng.bernoulli(params.subsample)) sample_indices.push_back((int)i);
      }
      if (sample_indices.empty()) sample_indices.push_back((int)rng.uniform_index(n));
    } else {
      sample_indices.resize(n);
      std::iota(sample_indices.begin(), sample_indices.end(), 0);
    }

    const Eigen::VectorXd residual = targets - current;
    // MAE negative gradient; the subgradient at zero residual is taken as 0.
    const Eigen::VectorXd gradient = residual.array().sign();

    TreeBuilder builder(binned, gradient, residual, params);
    GbdtTree tree = builder.build(std::move(sample_indices));
    Eigen::RowVectorXd row(features.cols());
    for (long i = 0; i < n; ++i) {
      row = features.row(i);
      current(i) += tree.evaluate(row);
    }
    model.trees.push_back(std::move(tree));

    if (!current.allFinite()) throw NumericError("gbdt diverged");
    if (stats != nullptr) {
      stats->train_mae.push_back((targets - current).cwiseAbs().mean());
    }
  }
  return model;
}

Eigen::VectorXd predict_gbdt(const GbdtModel& model,
                             const Eigen::MatrixXd& features) {
  if (features.cols() != model.num_features) {
    throw ConfigError("feature width does not match gbdt model");
  }
  Eigen::VectorXd out =
      Eigen::VectorXd::Constant(features.rows(), model.base_prediction);
  Eigen::RowVectorXd row(features.cols());
  for (long i = 0; i < features.rows(); ++i) {
    row = features.row(i);
    double sum = 0.0;
    for (const GbdtTree& tree : model.trees) sum += tree.evaluate(row);
    out(i) += sum;
  }
  return out;
}

}  // namespace sepred
