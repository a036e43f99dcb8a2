#include "sepred/features.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "sepred/errors.hpp"

namespace sepred {
namespace {

// Top-L singular pairs of one user via the small R x R Gram matrix. This is
// the preprocessing hot path, so the full T-sided SVD is avoided; squared
// singular values are the Gram eigenvalues and the selected V rows come out
// as u^H H / s.
struct UserSpectrum {
  std::vector<double> singular_sq;          // descending, kLayersPerUser values
  std::vector<Eigen::RowVectorXcd> rows;    // matching unit rows
};

UserSpectrum top_layers(const Eigen::MatrixXcd& h) {
  UserSpectrum out;
  if (h.rows() == kRxAntennas) {
    // Fixed-size path: the Gram matrix is 4 x 4, and a stack-allocated solve
    // keeps this hot loop free of heap traffic.
    const Eigen::Matrix4cd gram = h * h.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> eig(gram);
    for (int l = 0; l < kLayersPerUser; ++l) {
      const int idx = kRxAntennas - 1 - l;
      out.singular_sq.push_back(std::max(eig.eigenvalues()(idx), 0.0));
      Eigen::RowVectorXcd row = eig.eigenvectors().col(idx).adjoint() * h;
      const double norm = row.norm();
      if (!(norm > 0)) throw NumericError("degenerate channel row in features");
      out.rows.push_back(row / norm);
    }
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h * h.adjoint());
  const Eigen::VectorXd& ev = eig.eigenvalues();  // ascending
  for (int l = 0; l < kLayersPerUser; ++l) {
    const int idx = static_cast<int>(ev.size()) - 1 - l;
    out.singular_sq.push_back(std::max(ev(idx), 0.0));
    Eigen::RowVectorXcd row = eig.eigenvectors().col(idx).adjoint() * h;
    const double norm = row.norm();
    if (!(norm > 0)) throw NumericError("degenerate channel row in features");
    out.rows.push_back(row / norm);
  }
  return out;
}

void append(std::vector<double>& dst, const std::vector<double>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

Eigen::VectorXd to_vector(const std::vector<double>& values) {
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<long>(values.size()));
}

void append_flags(std::vector<double>& out, const RawFeatures& raw,
                  const FeatureSpec& spec) {
  if (spec.include_susinr) out.push_back(susinr_from_raw(raw));
  if (spec.include_sigma2) out.push_back(raw.sigma2);
}

}  // namespace

void FeatureSpec::validate() const {
  if (scheme == FeatureScheme::kPoly && poly_degree < 1) {
    throw ConfigError("poly feature degree must be >= 1");
  }
}

std::string to_string(FeatureScheme scheme) {
  switch (scheme) {
    case FeatureScheme::kDefault: return "default";
    case FeatureScheme::kSorted: return "sorted";
    case FeatureScheme::kPoly: return "poly";
  }
  throw ConfigError("bad feature scheme");
}

FeatureSpec feature_spec_from_string(const std::string& name) {
  if (name == "default") return FeatureSpec::defaults();
  if (name == "sorted") return FeatureSpec::sorted();
  if (name.rfind("poly", 0) == 0 && name.size() > 4) {
    const int degree = std::stoi(name.substr(4));
    return FeatureSpec::poly(degree);
  }
  throw ConfigError("unknown feature scheme: " + name);
}

double RawFeatures::PairBlock::max_value() const {
  return *std::max_element(values.begin(), values.end());
}

RawFeatures extract_raw(const ChannelObject& object) {
  const int num_users = object.num_users();
  std::vector<UserSpectrum> spectra;
  spectra.reserve(num_users);
  for (int k = 0; k < num_users; ++k) {
    spectra.push_back(top_layers(object.users[k]));
  }

  RawFeatures raw;
  raw.sigma2 = object.sigma2;
  for (const UserSpectrum& s : spectra) raw.singular_sq.push_back(s.singular_sq);

  for (int i = 0; i < num_users; ++i) {
    for (int j = 0; j < num_users; ++j) {
      if (i == j) continue;
      RawFeatures::PairBlock block;
      block.user_i = i;
      block.user_j = j;
      for (int li = 0; li < kLayersPerUser; ++li) {
        for (int lj = 0; lj < kLayersPerUser; ++lj) {
          block.values.push_back(
              std::norm(spectra[i].rows[li].dot(spectra[j].rows[lj])));
        }
      }
      raw.correlations.push_back(std::move(block));
    }
  }
  return raw;
}

RawFeatures sort_raw(const RawFeatures& raw) {
  RawFeatures out = raw;
  for (auto& block : out.singular_sq) {
    std::sort(block.begin(), block.end(), std::greater<>());
  }
  std::stable_sort(out.singular_sq.begin(), out.singular_sq.end(),
                   [](const auto& a, const auto& b) { return a[0] > b[0]; });
  for (auto& block : out.correlations) {
    std::sort(block.values.begin(), block.values.end(), std::greater<>());
  }
  std::stable_sort(out.correlations.begin(), out.correlations.end(),
                   [](const auto& a, const auto& b) {
                     return a.values[0] > b.values[0];
                   });
  return out;
}

std::vector<double> elementary_symmetric(const std::vector<double>& values,
                                         int k) {
  if (k < 1) throw ConfigError("elementary_symmetric needs k >= 1");
  std::vector<double> e(static_cast<std::size_t>(k) + 1, 0.0);
  e[0] = 1.0;
  int used = 0;
  for (double x : values) {
    ++used;
    for (int j = std::min(k, used); j >= 1; --j) {
      e[j] += x * e[j - 1];
    }
  }
  return {e.begin() + 1, e.end()};
}

double susinr_from_raw(const RawFeatures& raw) {
  if (!(raw.sigma2 > 0)) throw NumericError("sigma2 must be > 0");
  double outer = 1.0;
  for (const auto& block : raw.singular_sq) {
    double product = 1.0;
    for (double s2 : block) product *= s2;
    outer *= std::pow(product, 1.0 / block.size()) / block.size();
  }
  return std::pow(outer, 1.0 / raw.singular_sq.size()) / raw.sigma2;
}

Eigen::VectorXd assemble_from_raw(const RawFeatures& raw,
                                  const FeatureSpec& spec) {
  spec.validate();
  std::vector<double> out;

  if (spec.scheme == FeatureScheme::kPoly) {
    std::vector<double> all_s2;
    for (const auto& block : raw.singular_sq) append(all_s2, block);
    std::vector<double> all_corr;
    for (const auto& block : raw.correlations) append(all_corr, block.values);
    append(out, elementary_symmetric(all_s2, spec.poly_degree));
    append(out, elementary_symmetric(all_corr, spec.poly_degree));
  } else {
    RawFeatures sorted_storage;
    const RawFeatures* view = &raw;
    if (spec.scheme == FeatureScheme::kSorted) {
      sorted_storage = sort_raw(raw);
      view = &sorted_storage;
    }
    for (const auto& block : view->singular_sq) append(out, block);
    for (const auto& block : view->correlations) append(out, block.values);
  }

  append_flags(out, raw, spec);
  return to_vector(out);
}

Eigen::VectorXd assemble(const ChannelObject& object, const FeatureSpec& spec) {
  return assemble_from_raw(extract_raw(object), spec);
}

Eigen::VectorXd assemble_user_wise(const RawFeatures& raw,
                                   const FeatureSpec& spec, int user_index) {
  spec.validate();
  const int num_users = static_cast<int>(raw.singular_sq.size());
  std::vector<double> out = raw.singular_sq[user_index];  // own block first

  std::vector<std::vector<double>> other_s2;
  for (int j = 0; j < num_users; ++j) {
    if (j != user_index) other_s2.push_back(raw.singular_sq[j]);
  }
  std::vector<RawFeatures::PairBlock> own_corr;
  for (const auto& block : raw.correlations) {
    if (block.user_i == user_index) own_corr.push_back(block);
  }

  if (spec.scheme == FeatureScheme::kPoly) {
    std::vector<double> flat_s2;
    for (const auto& block : other_s2) append(flat_s2, block);
    std::vector<double> flat_corr;
    for (const auto& block : own_corr) append(flat_corr, block.values);
    append(out, elementary_symmetric(flat_s2, spec.poly_degree));
    append(out, elementary_symmetric(flat_corr, spec.poly_degree));
  } else {
    if (spec.scheme == FeatureScheme::kSorted) {
      for (auto& block : other_s2) {
        std::sort(block.begin(), block.end(), std::greater<>());
      }
      std::stable_sort(other_s2.begin(), other_s2.end(),
                       [](const auto& a, const auto& b) { return a[0] > b[0]; });
      for (auto& block : own_corr) {
        std::sort(block.values.begin(), block.values.end(), std::greater<>());
      }
      std::stable_sort(own_corr.begin(), own_corr.end(),
                       [](const auto& a, const auto& b) {
                         return a.values[0] > b.values[0];
                       });
    }
    for (const auto& block : other_s2) append(out, block);
    for (const auto& block : own_corr) append(out, block.values);
  }

  append_flags(out, raw, spec);
  return to_vector(out);
}

std::vector<std::string> feature_names(const FeatureSpec& spec, int num_users) {
  std::vector<std::string> names;
  if (spec.scheme == FeatureScheme::kPoly) {
    for (int i = 1; i <= spec.poly_degree; ++i) {
      names.push_back("es_s2_" + std::to_string(i));
    }
    for (int i = 1; i <= spec.poly_degree; ++i) {
      names.push_back("es_corr_" + std::to_string(i));
    }
  } else {
    const bool sorted = spec.scheme == FeatureScheme::kSorted;
    for (int u = 0; u < num_users; ++u) {
      for (int l = 0; l < kLayersPerUser; ++l) {
        names.push_back("s2_" + std::string(sorted ? "r" : "u") +
                        std::to_string(u) + "_l" + std::to_string(l));
      }
    }
    int pair = 0;
    for (int i = 0; i < num_users; ++i) {
      for (int j = 0; j < num_users; ++j) {
        if (i == j) continue;
        for (int idx = 0; idx < kLayersPerUser * kLayersPerUser; ++idx) {
          names.push_back(sorted ? "corr_p" + std::to_string(pair) + "_" +
                                       std::to_string(idx)
                                 : "corr_u" + std::to_string(i) + "_u" +
                                       std::to_string(j) + "_" +
                                       std::to_string(idx));
        }
        ++pair;
      }
    }
  }
  if (spec.include_susinr) names.push_back("susinr");
  if (spec.include_sigma2) names.push_back("sigma2");
  return names;
}

std::vector<std::string> user_wise_feature_names(const FeatureSpec& spec,
                                                 int num_users) {
  std::vector<std::string> names;
  for (int l = 0; l < kLayersPerUser; ++l) {
    names.push_back("own_s2_l" + std::to_string(l));
  }
  if (spec.scheme == FeatureScheme::kPoly) {
    for (int i = 1; i <= spec.poly_degree; ++i) {
      names.push_back("es_other_s2_" + std::to_string(i));
    }
    for (int i = 1; i <= spec.poly_degree; ++i) {
      names.push_back("es_own_corr_" + std::to_string(i));
    }
  } else {
    for (int j = 0; j < num_users - 1; ++j) {
      for (int l = 0; l < kLayersPerUser; ++l) {
        names.push_back("other_s2_" + std::to_string(j) + "_l" +
                        std::to_string(l));
      }
    }
    for (int j = 0; j < num_users - 1; ++j) {
      for (int idx = 0; idx < kLayersPerUser * kLayersPerUser; ++idx) {
        names.push_back("own_corr_" + std::to_string(j) + "_" +
                        std::to_string(idx));
      }
    }
  }
  if (spec.include_susinr) names.push_back("susinr");
  if (spec.include_sigma2) names.push_back("sigma2");
  return names;
}

Eigen::MatrixXd build_feature_matrix(const std::vector<ChannelObject>& objects,
                                     const FeatureSpec& spec) {
  if (objects.empty()) throw ConfigError("empty dataset");
  if (spec.scheme != FeatureScheme::kPoly) {
    const int k0 = objects.front().num_users();
    for (const auto& obj : objects) {
      if (obj.num_users() != k0) {
        throw ConfigError(
            "default/sorted features require a fixed user count, dataset is "
            "mixed-K");
      }
    }
  }
  const Eigen::VectorXd first = assemble(objects.front(), spec);
  Eigen::MatrixXd out(objects.size(), first.size());
  out.row(0) = first;
  for (std::size_t i = 1; i < objects.size(); ++i) {
    out.row(static_cast<long>(i)) = assemble(objects[i], spec);
  }
  return out;
}

NormalizationStats fit_normalizer(const Eigen::MatrixXd& features,
                                  const Eigen::VectorXd& targets) {
  const long n = features.rows();
  if (n < 2) throw ConfigError("normalizer needs at least 2 samples");
  if (targets.size() != n) throw ConfigError("feature/target size mismatch");

  NormalizationStats stats;
  stats.feature_mean = features.colwise().mean();
  stats.feature_std.resize(features.cols());
  for (long c = 0; c < features.cols(); ++c) {
    const double var =
        (features.col(c).array() - stats.feature_mean(c)).square().mean();
    stats.feature_std(c) = std::sqrt(var);
    if (stats.feature_std(c) > 0) {
      stats.kept.push_back(static_cast<int>(c));
    } else {
      stats.dropped.push_back(static_cast<int>(c));
    }
  }
  stats.target_mean = targets.mean();
  stats.target_std =
      std::sqrt((targets.array() - stats.target_mean).square().mean());
  if (!(stats.target_std > 0)) throw ConfigError("zero-variance target");
  return stats;
}

Eigen::MatrixXd normalize_features(const NormalizationStats& stats,
                                   const Eigen::MatrixXd& features) {
  if (features.cols() != stats.feature_mean.size()) {
    throw ConfigError("feature width does not match normalizer");
  }
  Eigen::MatrixXd out(features.rows(), static_cast<long>(stats.kept.size()));
  for (std::size_t i = 0; i < stats.kept.size(); ++i) {
    const int c = stats.kept[i];
    out.col(static_cast<long>(i)) =
        (features.col(c).array() - stats.feature_mean(c)) /
        stats.feature_std(c);
  }
  return out;
}

Eigen::MatrixXd denormalize_features(const NormalizationStats& stats,
                                     const Eigen::MatrixXd& normalized) {
  if (normalized.cols() != static_cast<long>(stats.kept.size())) {
    throw ConfigError("normalized width does not match normalizer");
  }
  Eigen::MatrixXd out(normalized.rows(), stats.feature_mean.size());
  for (long c = 0; c < out.cols(); ++c) {
    out.col(c).setConstant(stats.feature_mean(c));
  }
  for (std::size_t i = 0; i < stats.kept.size(); ++i) {
    const int c = stats.kept[i];
    out.col(c) = normalized.col(static_cast<long>(i)).array() *
                     stats.feature_std(c) +
                 stats.feature_mean(c);
  }
  return out;
}

Eigen::VectorXd normalize_targets(const NormalizationStats& stats,
                                  const Eigen::VectorXd& targets) {
  return (targets.array() - stats.target_mean) / stats.target_std;
}

Eigen::VectorXd denormalize_targets(const NormalizationStats& stats,
                                    const Eigen::VectorXd& normalized) {
  return normalized.array() * stats.target_std + stats.target_mean;
}

}  // namespace sepred
