#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sepred/channel.hpp"

namespace sepred {

// Per-user SVD in the convention H_k = U^H * diag(s) * V, with U unitary
// (R x R), s descending and V semi-unitary (R x T, orthonormal rows).
struct SvdDecomposition {
  Eigen::MatrixXcd u;  // R x R
  Eigen::VectorXd s;   // R, descending, >= 0
  Eigen::MatrixXcd v;  // R x T

  Eigen::MatrixXcd reconstruct() const {
    return u.adjoint() * s.asDiagonal() * v;
  }
};

// Stacked top-L_k right-singular rows over all users, with matched singular
// values. Rows are grouped by user in user order, descending within a user.
struct ReducedBasis {
  Eigen::MatrixXcd v_tilde;       // L x T
  Eigen::VectorXd s_tilde;        // L
  std::vector<int> layer_counts;  // L_k per user

  int total_layers() const { return static_cast<int>(v_tilde.rows()); }
  int num_users() const { return static_cast<int>(layer_counts.size()); }
  int user_offset(int user) const {
    int off = 0;
    for (int k = 0; k < user; ++k) off += layer_counts[k];
    return off;
  }
};

enum class PrecoderMethod { kMrt, kZf };

struct PrecodingMatrix {
  Eigen::MatrixXcd w;  // T x L, power-normalized
  double mu = 0.0;     // scalar meeting the per-antenna constraint with equality
  Eigen::VectorXd p;   // diagonal column normalizer applied before mu
  PrecoderMethod method = PrecoderMethod::kMrt;
};

enum class DetectorMethod { kMmse, kMmseIrc };

struct DetectionSet {
  std::vector<Eigen::MatrixXcd> g;  // K matrices, L_k x R_k
  DetectorMethod method = DetectorMethod::kMmse;
};

struct SeReport {
  double se_avg = 0.0;               // bits/s/Hz, layer-weighted user mean
  std::vector<double> se_user;       // log2(1 + effective SINR) per user
  std::vector<double> sinr_layers;   // L values, user-major layer order
  double susinr = 0.0;
  double sigma2 = 0.0;
};

// Deterministic up to the fixed phase convention: the first nonzero entry of
// each V row is made real-positive.
SvdDecomposition svd_per_user(const Eigen::MatrixXcd& h);

// Throws NumericError when some user's channel has rank < kLayersPerUser.
ReducedBasis build_reduced_basis(const ChannelObject& object);

PrecodingMatrix precode_mrt(const ReducedBasis& basis, int num_tx);
// Throws ConditioningError when cond(V V^H) exceeds 1e12.
PrecodingMatrix precode_zf(const ReducedBasis& basis, int num_tx);

// Eq.-style MMSE receiver for one user: G = A^H (A A^H + sigma2 I)^{-1} with
// A = H_k W_k.
Eigen::MatrixXcd detect_mmse(const Eigen::MatrixXcd& h_k,
                             const Eigen::MatrixXcd& w_k, double sigma2);

// MMSE-IRC: adds the inter-user interference covariance
// R_uu = H_k (sum_{u != k} W_u W_u^H) H_k^H inside the inverse.
Eigen::MatrixXcd detect_mmse_irc(const Eigen::MatrixXcd& h_k,
                                 const Eigen::MatrixXcd& w,
                                 const std::vector<int>& layer_counts,
                                 int user_index, double sigma2);

DetectionSet detect_all(const ChannelObject& object, const PrecodingMatrix& w,
                        const std::vector<int>& layer_counts,
                        DetectorMethod method);

// SINR of global layer l: |g H_k w_l|^2 / (sum_{i != l} |g H_k w_i|^2 +
// sigma2 ||g||^2).
double sinr_layer(const Eigen::MatrixXcd& w, const Eigen::MatrixXcd& h_k,
                  const Eigen::RowVectorXcd& g_l, int layer, double sigma2);

// Geometric mean of a user's layer SINRs; zero if any layer is zero.
double sinr_eff(const std::vector<double>& layer_sinrs);

SeReport spectral_efficiency(const ChannelObject& object,
                             const ReducedBasis& basis,
                             const PrecodingMatrix& w, const DetectionSet& g);

// Single-user SINR proxy built from singular values only:
// (1/sigma2) * (prod_k (1/L_k) (prod_l s_l^2)^{1/L_k})^{1/K}.
double susinr(const Eigen::VectorXd& s_tilde,
              const std::vector<int>& layer_counts, double sigma2);

}  // namespace sepred
