#include "sepred/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sepred/errors.hpp"
#include "sepred/rng.hpp"

namespace sepred {
namespace {

double safe_mape(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
  double sum = 0.0;
  for (long i = 0; i < target.size(); ++i) {
    sum += std::abs(target(i) - pred(i)) / std::max(std::abs(target(i)), 1e-12);
  }
  return sum / static_cast<double>(target.size());
}

// Forward with optional inverted-dropout masks (training path). Activations
// are stored for backprop.
struct ForwardPass {
  std::vector<Eigen::MatrixXd> activations;  // a0 = input, aL = output
};

ForwardPass forward(const MlpModel& model, const Eigen::MatrixXd& x,
                    const std::vector<Eigen::MatrixXd>* masks) {
  ForwardPass pass;
  pass.activations.push_back(x);
  const std::size_t n_layers = model.weights.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = pass.activations.back() * model.weights[l].transpose();
    z.rowwise() += model.biases[l].transpose();
    if (l + 1 < n_layers) {
      z = z.cwiseMax(0.0);
      if (masks != nullptr) z = z.cwiseProduct((*masks)[l]);
    }
    pass.activations.push_back(std::move(z));
  }
  return pass;
}

MlpGradients backward(const MlpModel& model, const ForwardPass& pass,
                      const Eigen::VectorXd& y, double weight_decay,
                      const std::vector<Eigen::MatrixXd>* masks) {
  const std::size_t n_layers = model.weights.size();
  const double n = static_cast<double>(y.size());

  MlpGradients grads;
  grads.d_weights.resize(n_layers);
  grads.d_biases.resize(n_layers);

  const Eigen::VectorXd pred = pass.activations.back().col(0);
  grads.loss = (pred - y).squaredNorm() / n;
  if (weight_decay > 0) {
    for (const auto& w : model.weights) {
      grads.loss += 0.5 * weight_decay * w.squaredNorm();
    }
  }

  Eigen::MatrixXd delta = (2.0 / n) * (pred - y);  // B x 1
  for (std::size_t l = n_layers; l-- > 0;) {
    grads.d_weights[l] = delta.transpose() * pass.activations[l];
    grads.d_biases[l] = delta.colwise().sum().transpose();
    if (weight_decay > 0) grads.d_weights[l] += weight_decay * model.weights[l];
    if (l > 0) {
      delta = delta * model.weights[l];
      // ReLU derivative through the (possibly masked) activation
      delta = delta.cwiseProduct(
          (pass.activations[l].array() > 0.0).cast<double>().matrix());
      if (masks != nullptr) delta = delta.cwiseProduct((*masks)[l - 1]);
    }
  }
  return grads;
}

struct FitResult {
  MlpModel model;
  double best_val_mape = std::numeric_limits<double>::infinity();
  double final_train_mse = std::numeric_limits<double>::infinity();
  bool diverged = false;
};

FitResult fit(const Eigen::MatrixXd& x_tr, const Eigen::VectorXd& y_tr,
              const Eigen::MatrixXd& x_val, const Eigen::VectorXd& y_val,
              double lr, double dropout, double weight_decay, int epochs,
              const MlpConfig& cfg) {
  FitResult result;
  MlpModel net =
      make_mlp(static_cast<int>(x_tr.cols()), cfg.hidden, cfg.seed);
  net.dropout_rate = dropout;
  net.weight_decay = weight_decay;

  std::vector<Eigen::MatrixXd> velocity_w;
  std::vector<Eigen::VectorXd> velocity_b;
  for (const auto& w : net.weights) velocity_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : net.biases) velocity_b.push_back(Eigen::VectorXd::Zero(b.size()));

  const long n = x_tr.rows();
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0L);
  Rng rng(cfg.seed, 42, 0xD20ULL);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    // Step decay: halve the rate after each fifth of the epoch budget, so
    // late epochs polish instead of bouncing around the SGD noise floor.
    const double epoch_lr =
        lr * std::pow(0.5, (5 * epoch) / std::max(epochs, 1));
    for (long i = n - 1; i > 0; --i) {
      std::swap(order[i], order[rng.uniform_index((std::uint64_t)i + 1)]);
    }
    for (long start = 0; start < n; start += cfg.batch_size) {
      const long b = std::min<long>(cfg.batch_size, n - start);
      Eigen::MatrixXd xb(b, x_tr.cols());
      Eigen::VectorXd yb(b);
      for (long i = 0; i < b; ++i) {
        xb.row(i) = x_tr.row(order[start + i]);
        yb(i) = y_tr(order[start + i]);
      }

      std::vector<Eigen::MatrixXd> masks;
      const std::vector<Eigen::MatrixXd>* mask_ptr = nullptr;
      if (dropout > 0) {
        for (std::size_t l = 0; l + 1 < net.weights.size(); ++l) {
          Eigen::MatrixXd mask(b, net.weights[l].rows());
          const double keep = 1.0 - dropout;
          for (long r = 0; r < mask.rows(); ++r) {
            for (long c = 0; c < mask.cols(); ++c) {
              mask(r, c) = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
            }
          }
          masks.push_back(std::move(mask));
        }
        mask_ptr = &masks;
      }

      const ForwardPass pass = forward(net, xb, mask_ptr);
      const MlpGradients grads = backward(net, pass, yb, weight_decay, mask_ptr);
      if (!std::isfinite(grads.loss)) {
        result.diverged = true;
        return result;
      }
      for (std::size_t l = 0; l < net.weights.size(); ++l) {
        velocity_w[l] =
            cfg.momentum * velocity_w[l] - epoch_lr * grads.d_weights[l];
        velocity_b[l] =
            cfg.momentum * velocity_b[l] - epoch_lr * grads.d_biases[l];
        net.weights[l] += velocity_w[l];
        net.biases[l] += velocity_b[l];
      }
    }

    if (x_val.rows() > 0) {
      const Eigen::VectorXd val_pred =
          mlp_forward(net, x_val).array() * cfg.target_std + cfg.target_mean;
      const Eigen::VectorXd val_true =
          y_val.array() * cfg.target_std + cfg.target_mean;
      const double val_mape = safe_mape(val_pred, val_true);
      if (std::isfinite(val_mape) && val_mape < result.best_val_mape) {
        result.best_val_mape = val_mape;
        result.model = net;
      }
    }
  }
  if (x_val.rows() == 0) result.model = net;

  const Eigen::VectorXd train_pred = mlp_forward(net, x_tr);
  result.final_train_mse = (train_pred - y_tr).squaredNorm() / n;
  if (!std::isfinite(result.final_train_mse)) result.diverged = true;
  return result;
}

}  // namespace

void MlpConfig::validate() const {
  if (hidden.empty()) throw ConfigError("mlp needs at least one hidden layer");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("mlp hidden width must be >= 1");
  }
  if (batch_size < 1) throw ConfigError("mlp batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("mlp epochs must be >= 1");
  if (lr_grid.empty()) throw ConfigError("mlp learning-rate grid is empty");
  for (double d : dropout_grid) {
    if (d < 0 || d >= 1) {
      throw ConfigError("dropout rate must be in [0, 1)");
    }
  }
  if (validation_fraction < 0 || validation_fraction >= 1) {
    throw ConfigError("validation_fraction must be in [0, 1)");
  }
}

MlpModel make_mlp(int input_size, const std::vector<int>& hidden,
                  std::uint64_t seed) {
  MlpModel model;
  std::vector<int> sizes;
  sizes.push_back(input_size);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);

  Rng rng(seed, 7, 0x1417ULL);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double scale = std::sqrt(2.0 / fan_in);  // He init for rectifiers
    Eigen::MatrixXd w(fan_out, fan_in);
    for (long r = 0; r < w.rows(); ++r) {
      for (long c = 0; c < w.cols(); ++c) {
        w(r, c) = scale * rng.gaussian();
      }
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return model;
}

Eigen::VectorXd mlp_forward(const MlpModel& model, const Eigen::MatrixXd& x) {
  return forward(model, x, nullptr).activations.back().col(0);
}

MlpGradients mlp_loss_and_gradient(const MlpModel& model,
                                   const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& y,
                                   double weight_decay) {
  const ForwardPass pass = forward(model, x, nullptr);
  return backward(model, pass, y, weight_decay, nullptr);
}

MlpModel train_mlp(const Eigen::MatrixXd& features,
                   const Eigen::VectorXd& targets, const MlpConfig& config) {
  config.validate();
  const long n = features.rows();
  if (targets.size() != n) throw ConfigError("feature/target size mismatch");
  if (n < 2) throw ConfigError("mlp needs at least 2 samples");

  // Held-out validation split, fixed seed.
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0L);
  Rng split_rng(config.seed, 0, 0x5714ULL);
  for (long i = n - 1; i > 0; --i) {
    std::swap(order[i], order[split_rng.uniform_index((std::uint64_t)i + 1)]);
  }
  const long n_val =
      std::min<long>(n - 1, (long)std::llround(config.validation_fraction * n));
  const long n_tr = n - n_val;
  Eigen::MatrixXd x_tr(n_tr, features.cols()), x_val(n_val, features.cols());
  Eigen::VectorXd y_tr(n_tr), y_val(n_val);
  for (long i = 0; i < n_tr; ++i) {
    x_tr.row(i) = features.row(order[i]);
    y_tr(i) = targets(order[i]);
  }
  for (long i = 0; i < n_val; ++i) {
    x_val.row(i) = features.row(order[n_tr + i]);
    y_val(i) = targets(order[n_tr + i]);
  }

  // Stage 1: learning rate by train MSE, plain network.
  double best_lr = 0.0;
  double best_mse = std::numeric_limits<double>::infinity();
  for (double lr : config.lr_grid) {
    const FitResult r = fit(x_tr, y_tr, Eigen::MatrixXd(0, features.cols()),
                            Eigen::VectorXd(0), lr, 0.0, 0.0,
                            config.lr_search_epochs, config);
    if (r.diverged) continue;  // abort this grid point, not the run
    if (r.final_train_mse < best_mse) {
      best_mse = r.final_train_mse;
      best_lr = lr;
    }
  }
  if (best_lr == 0.0) throw NumericError("all mlp learning rates diverged");

  // Stage 2: regularization by held-out MAPE.
  FitResult best;
  for (double dropout : config.dropout_grid) {
    for (double wd : config.weight_decay_grid) {
      FitResult r = fit(x_tr, y_tr, x_val, y_val, best_lr, dropout, wd,
                        config.epochs, config);
      if (r.diverged) continue;
      const double score =
          n_val > 0 ? r.best_val_mape : r.final_train_mse;
      const double best_score =
          n_val > 0 ? best.best_val_mape : best.final_train_mse;
      if (score < best_score) best = std::move(r);
    }
  }
  if (best.model.weights.empty()) {
    throw NumericError("all mlp configurations diverged");
  }
  return best.model;
}

Eigen::VectorXd predict_mlp(const MlpModel& model,
                            const Eigen::MatrixXd& features) {
  if (model.has_norm) {
    if (features.cols() != model.norm.feature_mean.size()) {
      throw ConfigError("feature width does not match mlp model");
    }
    const Eigen::VectorXd normalized =
        mlp_forward(model, normalize_features(model.norm, features));
    return denormalize_targets(model.norm, normalized);
  }
  if (features.cols() != model.input_size()) {
    throw ConfigError("feature width does not match mlp model");
  }
  return mlp_forward(model, features);
}

}  // namespace sepred
