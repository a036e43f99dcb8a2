#include "sepred/mimo.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "sepred/errors.hpp"

namespace sepred {
namespace {

constexpr double kZfConditionLimit = 1e12;
constexpr double kPhaseTol = 1e-12;

// mu is the largest scalar keeping every row of w inside the per-antenna
// budget 1/T; the binding row meets it with equality.
PrecodingMatrix finalize_precoder(Eigen::MatrixXcd raw, int num_tx,
                                  PrecoderMethod method) {
  const int num_layers = static_cast<int>(raw.cols());
  PrecodingMatrix out;
  out.method = method;
  out.p = Eigen::VectorXd(num_layers);
  for (int c = 0; c < num_layers; ++c) {
    const double norm = raw.col(c).norm();
    if (!(norm > 0)) throw NumericError("zero precoder column");
    out.p(c) = 1.0 / norm;
    raw.col(c) *= out.p(c);
  }
  double max_row_sq = 0.0;
  for (int r = 0; r < raw.rows(); ++r) {
    max_row_sq = std::max(max_row_sq, raw.row(r).squaredNorm());
  }
  out.mu = std::sqrt(1.0 / (num_tx * max_row_sq));
  out.w = out.mu * raw;
  return out;
}

}  // namespace

SvdDecomposition svd_per_user(const Eigen::MatrixXcd& h) {
  if (!h.allFinite()) throw NumericError("non-finite channel matrix");

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
      h, Eigen::ComputeFullU | Eigen::ComputeThinV);
  Eigen::MatrixXcd u_left = svd.matrixU();        // R x R, H = U S V_e^H
  Eigen::MatrixXcd v = svd.matrixV().adjoint();   // R x T, rows are v_l^H

  // Phase convention: first nonzero entry of each V row real-positive, with
  // the matching left singular vector rotated to keep the product unchanged.
  for (int l = 0; l < v.rows(); ++l) {
    for (int c = 0; c < v.cols(); ++c) {
      const std::complex<double> entry = v(l, c);
      if (std::abs(entry) > kPhaseTol) {
        const std::complex<double> phase = entry / std::abs(entry);
        v.row(l) *= std::conj(phase);
        u_left.col(l) *= phase;
        break;
      }
    }
  }

  SvdDecomposition out;
  out.u = u_left.adjoint();  // so that H = U^H S V
  out.s = svd.singularValues();
  out.v = std::move(v);
  return out;
}

ReducedBasis build_reduced_basis(const ChannelObject& object) {
  const int num_users = object.num_users();
  ReducedBasis basis;
  basis.layer_counts.assign(num_users, kLayersPerUser);
  basis.v_tilde.resize(object.total_layers(), kTxAntennas);
  basis.s_tilde.resize(object.total_layers());

  int row = 0;
  for (int k = 0; k < num_users; ++k) {
    const SvdDecomposition svd = svd_per_user(object.users[k]);
    if (!(svd.s(kLayersPerUser - 1) > 1e-12 * svd.s(0))) {
      throw NumericError("user " + std::to_string(k) + " channel has rank < " +
                         std::to_string(kLayersPerUser));
    }
    for (int l = 0; l < kLayersPerUser; ++l, ++row) {
      basis.v_tilde.row(row) = svd.v.row(l);
      basis.s_tilde(row) = svd.s(l);
    }
  }
  return basis;
}

PrecodingMatrix precode_mrt(const ReducedBasis& basis, int num_tx) {
  return finalize_precoder(basis.v_tilde.adjoint(), num_tx,
                           PrecoderMethod::kMrt);
}

PrecodingMatrix precode_zf(const ReducedBasis& basis, int num_tx) {
  const Eigen::MatrixXcd gram = basis.v_tilde * basis.v_tilde.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
  const Eigen::VectorXd& ev = eig.eigenvalues();  // ascending
  if (!(ev(0) > 0.0) || ev(ev.size() - 1) / ev(0) > kZfConditionLimit) {
    throw ConditioningError("ZF Gram matrix is near-singular");
  }
  const Eigen::MatrixXcd inv = gram.llt().solve(
      Eigen::MatrixXcd::Identity(gram.rows(), gram.cols()));
  return finalize_precoder(basis.v_tilde.adjoint() * inv, num_tx,
                           PrecoderMethod::kZf);
}

Eigen::MatrixXcd detect_mmse(const Eigen::MatrixXcd& h_k,
                             const Eigen::MatrixXcd& w_k, double sigma2) {
  if (!(sigma2 > 0)) throw NumericError("sigma2 must be > 0");
  const Eigen::MatrixXcd a = h_k * w_k;
  Eigen::MatrixXcd m = a * a.adjoint();
  m.diagonal().array() += sigma2;
  return m.llt().solve(a).adjoint();
}

Eigen::MatrixXcd detect_mmse_irc(const Eigen::MatrixXcd& h_k,
                                 const Eigen::MatrixXcd& w,
                                 const std::vector<int>& layer_counts,
                                 int user_index, double sigma2) {
  if (!(sigma2 > 0)) throw NumericError("sigma2 must be > 0");

  Eigen::MatrixXcd interference =
      Eigen::MatrixXcd::Zero(w.rows(), w.rows());
  int offset = 0;
  Eigen::MatrixXcd w_k;
  for (int u = 0; u < static_cast<int>(layer_counts.size()); ++u) {
    const auto block = w.middleCols(offset, layer_counts[u]);
    if (u == user_index) {
      w_k = block;
    } else {
      interference.noalias() += block * block.adjoint();
    }
    offset += layer_counts[u];
  }

  const Eigen::MatrixXcd a = h_k * w_k;
  Eigen::MatrixXcd m = a * a.adjoint() + h_k * interference * h_k.adjoint();
  m.diagonal().array() += sigma2;
  return m.llt().solve(a).adjoint();
}

DetectionSet detect_all(const ChannelObject& object, const PrecodingMatrix& w,
                        const std::vector<int>& layer_counts,
                        DetectorMethod method) {
  DetectionSet set;
  set.method = method;
  set.g.reserve(object.num_users());
  int offset = 0;
  for (int k = 0; k < object.num_users(); ++k) {
    if (method == DetectorMethod::kMmse) {
      set.g.push_back(detect_mmse(
          object.users[k], w.w.middleCols(offset, layer_counts[k]),
          object.sigma2));
    } else {
      set.g.push_back(
          detect_mmse_irc(object.users[k], w.w, layer_counts, k, object.sigma2));
    }
    offset += layer_counts[k];
  }
  return set;
}

double sinr_layer(const Eigen::MatrixXcd& w, const Eigen::MatrixXcd& h_k,
                  const Eigen::RowVectorXcd& g_l, int layer, double sigma2) {
  if (!(sigma2 > 0)) throw NumericError("sigma2 must be > 0");
  const Eigen::RowVectorXcd coupling = g_l * h_k * w;
  const double signal = std::norm(coupling(layer));
  double interference = 0.0;
  for (int i = 0; i < coupling.size(); ++i) {
    if (i != layer) interference += std::norm(coupling(i));
  }
  return signal / (interference + sigma2 * g_l.squaredNorm());
}

double sinr_eff(const std::vector<double>& layer_sinrs) {
  double product = 1.0;
  for (double s : layer_sinrs) {
    if (s == 0.0) return 0.0;
    product *= s;
  }
  return std::pow(product, 1.0 / static_cast<double>(layer_sinrs.size()));
}

SeReport spectral_efficiency(const ChannelObject& object,
                             const ReducedBasis& basis,
                             const PrecodingMatrix& w, const DetectionSet& g) {
  const int num_users = object.num_users();
  SeReport report;
  report.sigma2 = object.sigma2;
  report.se_user.reserve(num_users);
  report.sinr_layers.reserve(basis.total_layers());

  int layer = 0;
  double weighted_sum = 0.0;
  for (int k = 0; k < num_users; ++k) {
    const int count = basis.layer_counts[k];
    std::vector<double> user_sinrs(count);
    for (int l = 0; l < count; ++l, ++layer) {
      user_sinrs[l] =
          sinr_layer(w.w, object.users[k], g.g[k].row(l), layer, object.sigma2);
      report.sinr_layers.push_back(user_sinrs[l]);
    }
    const double eff = sinr_eff(user_sinrs);
    report.se_user.push_back(std::log2(1.0 + eff));
    weighted_sum += count * report.se_user.back();
  }
  report.se_avg = weighted_sum / num_users;
  report.susinr = susinr(basis.s_tilde, basis.layer_counts, object.sigma2);
  return report;
}

double susinr(const Eigen::VectorXd& s_tilde,
              const std::vector<int>& layer_counts, double sigma2) {
  if (!(sigma2 > 0)) throw NumericError("sigma2 must be > 0");
  const int num_users = static_cast<int>(layer_counts.size());
  double outer = 1.0;
  int offset = 0;
  for (int k = 0; k < num_users; ++k) {
    const int count = layer_counts[k];
    double product = 1.0;
    for (int l = 0; l < count; ++l) {
      const double s = s_tilde(offset + l);
      product *= s * s;
    }
    outer *= std::pow(product, 1.0 / count) / count;
    offset += count;
  }
  return std::pow(outer, 1.0 / num_users) / sigma2;
}

}  // namespace sepred
