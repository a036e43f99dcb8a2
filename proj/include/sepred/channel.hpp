#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sepred/rng.hpp"

namespace sepred {

// Antenna geometry is fixed across the toolkit: 64 transmit antennas at the
// base station, 4 receive antennas and 2 spatial layers per user.
inline constexpr int kTxAntennas = 64;
inline constexpr int kRxAntennas = 4;
inline constexpr int kLayersPerUser = 2;

enum class ScenarioKind { kUrbanAnalog, kRuralAnalog, kIid };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_from_string(const std::string& name);

// Parameters of the synthetic channel generator. The geometric modes build
// each user channel as a sum of planar-wavefront steering-vector outer
// products with complex Gaussian path gains; the iid mode draws i.i.d.
// standard complex Gaussian entries.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kIid;
  int num_paths = 8;
  double angular_spread_deg = 20.0;
  double los_probability = 0.5;
  double path_gain_decay = 0.85;   // per-path power ratio, in (0, 1]
  double sigma2_min = 1e-3;        // noise variance range, log-uniform
  double sigma2_max = 1.0;
  std::uint64_t seed = 0;

  static ScenarioConfig urban(std::uint64_t seed);
  static ScenarioConfig rural(std::uint64_t seed);
  static ScenarioConfig iid(std::uint64_t seed);

  void validate() const;  // throws ConfigError on bad fields
};

// One dataset sample: per-user channel matrices H_k (R x T) plus the noise
// variance the sample was generated with.
struct ChannelObject {
  std::vector<Eigen::MatrixXcd> users;  // K matrices, each kRxAntennas x kTxAntennas
  double sigma2 = 0.0;
  std::string scenario_tag;

  int num_users() const { return static_cast<int>(users.size()); }
  int total_layers() const { return num_users() * kLayersPerUser; }
};

// Fixed user count or a set to sample from uniformly per object.
struct KSpec {
  std::vector<int> values;

  static KSpec fixed(int k) { return KSpec{{k}}; }
  static KSpec mixed(std::vector<int> ks) { return KSpec{std::move(ks)}; }
  bool is_fixed() const { return values.size() == 1; }
};

// Raw single-user draw, no rank repair. Exposed for tests that need to see
// degenerate (rank-deficient) channels before the retry logic kicks in.
Eigen::MatrixXcd draw_user_channel(const ScenarioConfig& cfg, Rng& rng);

// Deterministic in (cfg.seed, sample_index). Throws GenerationError if a
// user stays rank-deficient after the retry budget.
ChannelObject generate_channel(const ScenarioConfig& cfg, int num_users,
                               std::uint64_t sample_index);

// Objects for indices [first_index, first_index + n). When k_spec holds
// several values, K is sampled uniformly per object.
std::vector<ChannelObject> generate_dataset(const ScenarioConfig& cfg,
                                            std::size_t n, const KSpec& k_spec,
                                            std::uint64_t first_index = 0);

// Binary "SEDS" container, bit-exact round trip. See save for the layout.
void save_dataset(const std::vector<ChannelObject>& objects,
                  const std::filesystem::path& path);
std::vector<ChannelObject> load_dataset(const std::filesystem::path& path);

}  // namespace sepred
