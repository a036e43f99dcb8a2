#include "sepred/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sepred/errors.hpp"
#include "sepred/rng.hpp"

namespace sepred {
namespace {

constexpr int kGridPoints = 30;
constexpr double kGridSpan = 1e-8;  // lambda_max down to lambda_max * span
constexpr int kMaxSweeps = 1000;
constexpr double kSweepTol = 1e-11;

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

struct Standardized {
  Eigen::MatrixXd x;          // kept columns, zero mean, unit variance
  std::vector<int> kept;
  Eigen::VectorXd mean, std;  // over kept columns
  double y_mean = 0.0;
  Eigen::VectorXd y;          // centered
};

Standardized standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Standardized s;
  std::vector<double> means, stds;
  for (long c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    const double var = (x.col(c).array() - mean).square().mean();
    if (var > 0) {
      s.kept.push_back(static_cast<int>(c));
      means.push_back(mean);
      stds.push_back(std::sqrt(var));
    }
  }
  if (s.kept.empty()) {
    throw ConfigError("design matrix is constant, nothing to fit");
  }
  s.mean = Eigen::Map<Eigen::VectorXd>(means.data(), (long)means.size());
  s.std = Eigen::Map<Eigen::VectorXd>(stds.data(), (long)stds.size());
  s.x.resize(x.rows(), (long)s.kept.size());
  for (std::size_t i = 0; i < s.kept.size(); ++i) {
    s.x.col((long)i) = (x.col(s.kept[i]).array() - s.mean((long)i)) / s.std((long)i);
  }
  s.y_mean = y.mean();
  s.y = y.array() - s.y_mean;
  return s;
}

double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, double lambda) {
  const double n = static_cast<double>(x.rows());
  return (y - x * w).squaredNorm() / (2.0 * n) + lambda * w.lpNorm<1>();
}

// Cyclic coordinate descent on standardized columns (unit variance makes the
// per-coordinate curvature 1).
void lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               double lambda, Eigen::VectorXd& w,
               std::vector<double>* objective_trace = nullptr) {
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd residual = y - x * w;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double max_delta = 0.0;
    for (long j = 0; j < x.cols(); ++j) {
      const double old = w(j);
      const double rho = x.col(j).dot(residual) / n + old;
      const double updated = soft_threshold(rho, lambda);
      if (updated != old) {
        residual += x.col(j) * (old - updated);
        w(j) = updated;
        max_delta = std::max(max_delta, std::abs(updated - old));
      }
    }
    if (objective_trace != nullptr) {
      objective_trace->push_back(lasso_objective(x, y, w, lambda));
    }
    if (max_delta < kSweepTol) break;
  }
}

std::vector<double> lambda_grid(const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& y) {
  const double n = static_cast<double>(x.rows());
  double lambda_max = 0.0;
  for (long j = 0; j < x.cols(); ++j) {
    lambda_max = std::max(lambda_max, std::abs(x.col(j).dot(y)) / n);
  }
  if (!(lambda_max > 0)) lambda_max = 1.0;
  std::vector<double> grid(kGridPoints);
  const double ratio = std::pow(kGridSpan, 1.0 / (kGridPoints - 1));
  double lam = lambda_max;
  for (int i = 0; i < kGridPoints; ++i, lam *= ratio) grid[i] = lam;
  return grid;
}

}  // namespace

LinearModel train_linear(const Eigen::MatrixXd& features,
                         const Eigen::VectorXd& targets, int folds,
                         std::uint64_t seed, LinearTrainTrace* trace) {
  const long n = features.rows();
  if (folds < 2) throw ConfigError("need at least 2 CV folds");
  if (n < folds) throw ConfigError("need at least one sample per fold");
  if (targets.size() != n) throw ConfigError("feature/target size mismatch");

  const Standardized full = standardize(features, targets);
  const std::vector<double> grid = lambda_grid(full.x, full.y);

  // Fisher-Yates shuffle with the toolkit Rng, then contiguous folds.
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0L);
  Rng rng(seed, 0, 0xCD5EEDULL);
  for (long i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.uniform_index(static_cast<std::uint64_t>(i) + 1)]);
  }

  std::vector<double> cv_error(grid.size(), 0.0);
  for (int fold = 0; fold < folds; ++fold) {
    const long lo = fold * n / folds;
    const long hi = (fold + 1) * n / folds;
    const long n_val = hi - lo;
    const long n_tr = n - n_val;

    Eigen::MatrixXd x_tr(n_tr, features.cols()), x_val(n_val, features.cols());
    Eigen::VectorXd y_tr(n_tr), y_val(n_val);
    long it = 0, iv = 0;
    for (long i = 0; i < n; ++i) {
      const long row = order[i];
      if (i >= lo && i < hi) {
        x_val.row(iv) = features.row(row);
        y_val(iv++) = targets(row);
      } else {
        x_tr.row(it) = features.row(row);
        y_tr(it++) = targets(row);
      }
    }

    const Standardized s = standardize(x_tr, y_tr);
    Eigen::MatrixXd xv(n_val, (long)s.kept.size());
    for (std::size_t c = 0; c < s.kept.size(); ++c) {
      xv.col((long)c) = (x_val.col(s.kept[c]).array() - s.mean((long)c)) / s.std((long)c);
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero((long)s.kept.size());
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {  // warm start down the path
      lasso_fit(s.x, s.y, grid[gi], w);
      const Eigen::VectorXd pred = (xv * w).array() + s.y_mean;
      cv_error[gi] += (pred - y_val).squaredNorm() / static_cast<double>(n_val);
    }
  }

  const std::size_t best = static_cast<std::size_t>(
      std::min_element(cv_error.begin(), cv_error.end()) - cv_error.begin());

  Eigen::VectorXd w = Eigen::VectorXd::Zero((long)full.kept.size());
  std::vector<double> objective_trace;
  for (std::size_t gi = 0; gi <= best; ++gi) {  // warm-started path to best
    lasso_fit(full.x, full.y, grid[gi], w,
              gi == best ? &objective_trace : nullptr);
  }

  LinearModel model;
  model.l1_strength = grid[best];
  model.weights = Eigen::VectorXd::Zero(features.cols());
  model.bias = full.y_mean;
  for (std::size_t c = 0; c < full.kept.size(); ++c) {
    const double w_raw = w((long)c) / full.std((long)c);
    model.weights(full.kept[c]) = w_raw;
    model.bias -= w_raw * full.mean((long)c);
  }

  if (trace != nullptr) {
    trace->objective_sweeps = std::move(objective_trace);
    trace->lambda_grid = grid;
    trace->cv_errors = std::move(cv_error);
  }
  return model;
}

Eigen::VectorXd predict_linear(const LinearModel& model,
                               const Eigen::MatrixXd& features) {
  if (features.cols() != model.weights.size()) {
    throw ConfigError("feature width does not match linear model");
  }
  return (features * model.weights).array() + model.bias;
}

}  // namespace sepred
