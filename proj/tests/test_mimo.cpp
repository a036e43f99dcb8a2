#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "sepred/channel.hpp"
#include "sepred/errors.hpp"
#include "sepred/mimo.hpp"
#include "sepred/rng.hpp"

using namespace sepred;

namespace {

Eigen::MatrixXcd random_complex(int rows, int cols, Rng& rng) {
  Eigen::MatrixXcd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.complex_gaussian();
  }
  return m;
}

// Straight-line reimplementation of the per-layer SINR formula, used as an
// independent oracle.
double sinr_naive(const Eigen::MatrixXcd& w, const Eigen::MatrixXcd& h_k,
                  const Eigen::RowVectorXcd& g_l, int layer, double sigma2) {
  const Eigen::RowVectorXcd gh = g_l * h_k;
  double interference = 0.0;
  double signal = 0.0;
  for (int i = 0; i < w.cols(); ++i) {
    std::complex<double> dot = 0.0;
    for (int t = 0; t < w.rows(); ++t) dot += gh(t) * w(t, i);
    if (i == layer) {
      signal = std::norm(dot);
    } else {
      interference += std::norm(dot);
    }
  }
  double g_norm_sq = 0.0;
  for (int r = 0; r < g_l.size(); ++r) g_norm_sq += std::norm(g_l(r));
  return signal / (interference + sigma2 * g_norm_sq);
}

double geometric_mean(const std::vector<double>& v) {
  double p = 1.0;
  for (double x : v) p *= x;
  return std::pow(p, 1.0 / static_cast<double>(v.size()));
}

ChannelObject test_object(int users, std::uint64_t index, double sigma2 = 0.1) {
  ChannelObject obj = generate_channel(ScenarioConfig::urban(77), users, index);
  obj.sigma2 = sigma2;
  return obj;
}

}  // namespace

TEST_CASE("svd of identity and diagonal matrices") {
  SvdDecomposition id = svd_per_user(Eigen::MatrixXcd::Identity(2, 2));
  CHECK(id.s(0) == doctest::Approx(1.0));
  CHECK(id.s(1) == doctest::Approx(1.0));

  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 2.0;
  SvdDecomposition diag = svd_per_user(d);
  CHECK(diag.s(0) == doctest::Approx(3.0));
  CHECK(diag.s(1) == doctest::Approx(2.0));
}

TEST_CASE("svd factors reconstruct random channels") {
  Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXcd h = random_complex(4, 64, rng);
    const SvdDecomposition svd = svd_per_user(h);

    CHECK((svd.reconstruct() - h).norm() / h.norm() < 1e-9);
    CHECK((svd.u * svd.u.adjoint() - Eigen::MatrixXcd::Identity(4, 4)).norm() < 1e-9);
    CHECK((svd.v * svd.v.adjoint() - Eigen::MatrixXcd::Identity(4, 4)).norm() < 1e-9);
    for (int i = 1; i < svd.s.size(); ++i) CHECK(svd.s(i - 1) >= svd.s(i));
    CHECK(svd.s(svd.s.size() - 1) >= 0.0);
    // Phase convention makes the first nonzero entry of each V row
    // real-positive, so repeated runs agree exactly.
    const SvdDecomposition again = svd_per_user(h);
    CHECK(svd.v == again.v);
    for (int r = 0; r < 4; ++r) {
      int c = 0;
      while (c < 64 && std::abs(svd.v(r, c)) < 1e-12) ++c;
      REQUIRE(c < 64);
      CHECK(svd.v(r, c).imag() == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(svd.v(r, c).real() > 0.0);
    }
  }
}

TEST_CASE("svd rejects non-finite input") {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 3);
  h(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(svd_per_user(h), NumericError);
}

TEST_CASE("reduced basis stacks top rows per user in order") {
  const ChannelObject obj = test_object(2, 0);
  const ReducedBasis basis = build_reduced_basis(obj);
  REQUIRE(basis.total_layers() == 4);
  REQUIRE(basis.layer_counts == std::vector<int>{2, 2});

  for (int k = 0; k < 2; ++k) {
    const SvdDecomposition svd = svd_per_user(obj.users[k]);
    const int off = basis.user_offset(k);
    for (int l = 0; l < kLayersPerUser; ++l) {
      CHECK((basis.v_tilde.row(off + l) - svd.v.row(l)).norm() < 1e-12);
      CHECK(basis.s_tilde(off + l) == doctest::Approx(svd.s(l)));
    }
    CHECK(basis.s_tilde(off) >= basis.s_tilde(off + 1));
  }
}

TEST_CASE("permuting users permutes the reduced basis blocks") {
  ChannelObject obj = test_object(3, 1);
  ChannelObject permuted = obj;
  permuted.users = {obj.users[2], obj.users[0], obj.users[1]};

  const ReducedBasis a = build_reduced_basis(obj);
  const ReducedBasis b = build_reduced_basis(permuted);
  const std::vector<int> src = {2, 0, 1};
  for (int k = 0; k < 3; ++k) {
    CHECK((b.v_tilde.block(a.user_offset(k), 0, 2, 64) -
           a.v_tilde.block(a.user_offset(src[k]), 0, 2, 64))
              .norm() < 1e-12);
  }
}

TEST_CASE("mrt on an identity basis meets the per-antenna bound exactly") {
  ReducedBasis basis;
  basis.v_tilde = Eigen::MatrixXcd::Identity(2, 2);
  basis.s_tilde = Eigen::VectorXd::Ones(2);
  basis.layer_counts = {1, 1};

  const PrecodingMatrix w = precode_mrt(basis, 2);
  CHECK(w.mu == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK((w.w - w.mu * Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("precoder columns are unit norm before the power scalar") {
  const ChannelObject obj = test_object(3, 2);
  const ReducedBasis basis = build_reduced_basis(obj);
  for (const PrecodingMatrix& w :
       {precode_mrt(basis, kTxAntennas), precode_zf(basis, kTxAntennas)}) {
    REQUIRE(w.mu > 0);
    for (int c = 0; c < w.w.cols(); ++c) {
      CHECK(w.w.col(c).norm() / w.mu == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("per-antenna power constraint is tight") {
  const double budget = 1.0 / kTxAntennas;
  for (int users : {2, 4, 8}) {
    const ChannelObject obj = test_object(users, 3 + users);
    const ReducedBasis basis = build_reduced_basis(obj);
    for (const PrecodingMatrix& w :
         {precode_mrt(basis, kTxAntennas), precode_zf(basis, kTxAntennas)}) {
      double max_row = 0.0;
      for (int r = 0; r < w.w.rows(); ++r) {
        const double row_sq = w.w.row(r).squaredNorm();
        CHECK(row_sq <= budget + 1e-12);
        max_row = std::max(max_row, row_sq);
      }
      CHECK(max_row == doctest::Approx(budget).epsilon(1e-9));
    }
  }
}

TEST_CASE("zf equals mrt when the stacked rows are orthonormal") {
  ReducedBasis basis;
  basis.v_tilde = Eigen::MatrixXcd::Zero(3, 8);
  basis.v_tilde(0, 0) = 1.0;
  basis.v_tilde(1, 3) = 1.0;
  basis.v_tilde(2, 6) = 1.0;
  basis.s_tilde = Eigen::VectorXd::Ones(3);
  basis.layer_counts = {2, 1};

  const PrecodingMatrix mrt = precode_mrt(basis, 8);
  const PrecodingMatrix zf = precode_zf(basis, 8);
  CHECK((mrt.w - zf.w).norm() < 1e-10);
}

TEST_CASE("zf inverts the reduced channel up to the diagonal") {
  const ChannelObject obj = test_object(4, 9);
  const ReducedBasis basis = build_reduced_basis(obj);
  const PrecodingMatrix zf = precode_zf(basis, kTxAntennas);

  const Eigen::MatrixXcd product = basis.v_tilde * zf.w;
  double off_diag = 0.0;
  for (int r = 0; r < product.rows(); ++r) {
    for (int c = 0; c < product.cols(); ++c) {
      if (r != c) off_diag += std::norm(product(r, c));
    }
  }
  CHECK(std::sqrt(off_diag) < 1e-8 * product.norm());
}

TEST_CASE("zf refuses a duplicated user") {
  ChannelObject obj = test_object(2, 10);
  obj.users[1] = obj.users[0];
  const ReducedBasis basis = build_reduced_basis(obj);
  CHECK_THROWS_AS(precode_zf(basis, kTxAntennas), ConditioningError);
}

TEST_CASE("mmse detection matches the closed forms") {
  // Scalar channel: A = 1, sigma2 = 1 -> G = 1/2.
  Eigen::MatrixXcd one = Eigen::MatrixXcd::Identity(1, 1);
  CHECK(std::abs(detect_mmse(one, one, 1.0)(0, 0) - 0.5) < 1e-15);

  // Zero effective channel -> zero detector.
  Eigen::MatrixXcd zero = Eigen::MatrixXcd::Zero(1, 1);
  CHECK(detect_mmse(one, zero, 1.0).norm() == 0.0);

  // Random instance: G must satisfy G (A A^H + s2 I) = A^H.
  Rng rng(55);
  const Eigen::MatrixXcd h = random_complex(4, 8, rng);
  const Eigen::MatrixXcd w_k = random_complex(8, 2, rng);
  const double sigma2 = 0.3;
  const Eigen::MatrixXcd a = h * w_k;
  const Eigen::MatrixXcd g = detect_mmse(h, w_k, sigma2);
  const Eigen::MatrixXcd residual =
      g * (a * a.adjoint() + sigma2 * Eigen::MatrixXcd::Identity(4, 4)) -
      a.adjoint();
  CHECK(residual.norm() < 1e-10);
}

TEST_CASE("irc detection reduces to mmse for a single user") {
  const ChannelObject obj = test_object(1, 12);
  const ReducedBasis basis = build_reduced_basis(obj);
  const PrecodingMatrix w = precode_zf(basis, kTxAntennas);

  const Eigen::MatrixXcd mmse =
      detect_mmse(obj.users[0], w.w, obj.sigma2);
  const Eigen::MatrixXcd irc = detect_mmse_irc(obj.users[0], w.w,
                                               basis.layer_counts, 0, obj.sigma2);
  CHECK((mmse - irc).norm() < 1e-12);
}

TEST_CASE("the two interference covariance forms agree") {
  for (int users : {2, 3, 4}) {
    const ChannelObject obj = test_object(users, 20 + users);
    const ReducedBasis basis = build_reduced_basis(obj);
    const PrecodingMatrix w = precode_mrt(basis, kTxAntennas);

    for (int k = 0; k < users; ++k) {
      const Eigen::MatrixXcd& h = obj.users[k];
      const int off = basis.user_offset(k);
      const Eigen::MatrixXcd w_k = w.w.middleCols(off, basis.layer_counts[k]);

      const Eigen::MatrixXcd complement_form =
          h * (w.w * w.w.adjoint() - w_k * w_k.adjoint()) * h.adjoint();
      Eigen::MatrixXcd sum_form = Eigen::MatrixXcd::Zero(4, 4);
      for (int u = 0; u < users; ++u) {
        if (u == k) continue;
        const Eigen::MatrixXcd w_u =
            w.w.middleCols(basis.user_offset(u), basis.layer_counts[u]);
        sum_form += h * w_u * w_u.adjoint() * h.adjoint();
      }
      CHECK((complement_form - sum_form).norm() < 1e-10);

      // Substituting the IRC detector back into its defining equation.
      const Eigen::MatrixXcd a = h * w_k;
      const Eigen::MatrixXcd g =
          detect_mmse_irc(h, w.w, basis.layer_counts, k, obj.sigma2);
      const Eigen::MatrixXcd residual =
          g * (a * a.adjoint() + sum_form +
               obj.sigma2 * Eigen::MatrixXcd::Identity(4, 4)) -
          a.adjoint();
      CHECK(residual.norm() < 1e-10);
    }
  }
}

TEST_CASE("layer sinr closed-form cases") {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(1, 1);
  Eigen::RowVectorXcd g(1);
  g(0) = 1.0;

  Eigen::MatrixXcd w_single = Eigen::MatrixXcd::Identity(1, 1);
  CHECK(sinr_layer(w_single, h, g, 0, 1.0) == doctest::Approx(1.0));

  Eigen::MatrixXcd w_two(1, 2);
  w_two << 1.0, 1.0;
  CHECK(sinr_layer(w_two, h, g, 0, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("layer sinr matches a naive loop evaluator") {
  Rng rng(66);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXcd h = random_complex(4, 16, rng);
    const Eigen::MatrixXcd w = random_complex(16, 6, rng);
    Eigen::RowVectorXcd g(4);
    for (int i = 0; i < 4; ++i) g(i) = rng.complex_gaussian();
    const double sigma2 = 0.25;

    for (int layer = 0; layer < 6; ++layer) {
      const double fast = sinr_layer(w, h, g, layer, sigma2);
      const double slow = sinr_naive(w, h, g, layer, sigma2);
      CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
    }
  }
}

TEST_CASE("layer sinr is invariant to detector row scaling") {
  Rng rng(67);
  const Eigen::MatrixXcd h = random_complex(4, 16, rng);
  const Eigen::MatrixXcd w = random_complex(16, 4, rng);
  Eigen::RowVectorXcd g(4);
  for (int i = 0; i < 4; ++i) g(i) = rng.complex_gaussian();

  const double base = sinr_layer(w, h, g, 1, 0.5);
  for (const std::complex<double> c : {std::complex<double>(3.7, 0.0),
                                       std::complex<double>(0.0, -2.0),
                                       std::complex<double>(-0.4, 1.1)}) {
    const Eigen::RowVectorXcd scaled = c * g;
    CHECK(sinr_layer(w, h, scaled, 1, 0.5) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("effective sinr is the geometric mean with zero annihilation") {
  CHECK(sinr_eff({4.0, 1.0}) == doctest::Approx(2.0));
  CHECK(sinr_eff({7.25}) == doctest::Approx(7.25));
  CHECK(sinr_eff({0.0, 9.0}) == 0.0);
}

TEST_CASE("se report is internally consistent") {
  for (const PrecoderMethod precoder : {PrecoderMethod::kMrt, PrecoderMethod::kZf}) {
    for (const DetectorMethod detector :
         {DetectorMethod::kMmse, DetectorMethod::kMmseIrc}) {
      const ChannelObject obj = test_object(3, 30);
      const ReducedBasis basis = build_reduced_basis(obj);
      const PrecodingMatrix w = precoder == PrecoderMethod::kZf
                                    ? precode_zf(basis, kTxAntennas)
                                    : precode_mrt(basis, kTxAntennas);
      const DetectionSet g = detect_all(obj, w, basis.layer_counts, detector);
      const SeReport report = spectral_efficiency(obj, basis, w, g);

      REQUIRE(report.sinr_layers.size() == 6);
      REQUIRE(report.se_user.size() == 3);
      CHECK(report.sigma2 == obj.sigma2);
      CHECK(report.susinr > 0.0);

      double se_avg = 0.0;
      for (int k = 0; k < 3; ++k) {
        std::vector<double> layers(
            report.sinr_layers.begin() + basis.user_offset(k),
            report.sinr_layers.begin() + basis.user_offset(k) + 2);
        for (double s : layers) CHECK(s >= 0.0);
        const double se_k = std::log2(1.0 + geometric_mean(layers));
        CHECK(report.se_user[k] == doctest::Approx(se_k).epsilon(1e-10));
        se_avg += kLayersPerUser * se_k;
      }
      se_avg /= 3.0;
      CHECK(report.se_avg == doctest::Approx(se_avg).epsilon(1e-10));
    }
  }
}

TEST_CASE("user permutation leaves se_avg and susinr unchanged") {
  for (const PrecoderMethod precoder : {PrecoderMethod::kMrt, PrecoderMethod::kZf}) {
    for (const DetectorMethod detector :
         {DetectorMethod::kMmse, DetectorMethod::kMmseIrc}) {
      const ChannelObject obj = test_object(3, 31);
      ChannelObject permuted = obj;
      const std::vector<int> src = {1, 2, 0};
      for (int k = 0; k < 3; ++k) permuted.users[k] = obj.users[src[k]];

      auto run = [&](const ChannelObject& o) {
        const ReducedBasis basis = build_reduced_basis(o);
        const PrecodingMatrix w = precoder == PrecoderMethod::kZf
                                      ? precode_zf(basis, kTxAntennas)
                                      : precode_mrt(basis, kTxAntennas);
        return spectral_efficiency(o, basis, w,
                                   detect_all(o, w, basis.layer_counts, detector));
      };
      const SeReport a = run(obj);
      const SeReport b = run(permuted);

      CHECK(b.se_avg == doctest::Approx(a.se_avg).epsilon(1e-10));
      CHECK(b.susinr == doctest::Approx(a.susinr).epsilon(1e-10));
      for (int k = 0; k < 3; ++k) {
        CHECK(b.se_user[k] == doctest::Approx(a.se_user[src[k]]).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("se_avg does not increase with noise power") {
  ChannelObject obj = test_object(2, 32);
  const ReducedBasis basis = build_reduced_basis(obj);
  const PrecodingMatrix w = precode_zf(basis, kTxAntennas);

  double previous = std::numeric_limits<double>::infinity();
  for (double sigma2 : {1e-3, 1e-2, 1e-1, 0.5, 1.0, 4.0}) {
    obj.sigma2 = sigma2;
    const DetectionSet g =
        detect_all(obj, w, basis.layer_counts, DetectorMethod::kMmse);
    const SeReport report = spectral_efficiency(obj, basis, w, g);
    CHECK(report.se_avg <= previous * (1.0 + 1e-12));
    previous = report.se_avg;
  }
}

TEST_CASE("susinr closed-form cases") {
  Eigen::VectorXd s1(1);
  s1 << 2.0;
  CHECK(susinr(s1, {1}, 1.0) == doctest::Approx(4.0));

  Eigen::VectorXd s2(2);
  s2 << 2.0, 2.0;
  CHECK(susinr(s2, {2}, 1.0) == doctest::Approx(2.0));
  CHECK(susinr(s2, {2}, 2.0) == doctest::Approx(1.0));  // 1/sigma2 scaling
}
