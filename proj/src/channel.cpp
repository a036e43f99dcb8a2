#include "sepred/channel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sepred/crc32.hpp"
#include "sepred/errors.hpp"

namespace sepred {
namespace {

constexpr int kMaxRankRetries = 8;
constexpr double kRankRelTol = 1e-7;  // s_L / s_1 below this counts as deficient

// Stream ids for the per-object Rng: stream 0 draws K and sigma2, user k
// retry a uses 1 + k * (retries + 1) + a.
std::uint64_t user_stream(int user, int attempt) {
  return 1 + static_cast<std::uint64_t>(user) * (kMaxRankRetries + 1) + attempt;
}

Eigen::VectorXcd steering(int n, double angle_rad) {
  Eigen::VectorXcd a(n);
  const double k = M_PI * std::sin(angle_rad);
  for (int i = 0; i < n; ++i) {
    a(i) = std::polar(1.0, k * i);
  }
  return a;
}

bool has_min_rank(const Eigen::MatrixXcd& h, int min_rank) {
  // Eigenvalues of the small Gram matrix H H^H are the squared singular values.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h * h.adjoint());
  const Eigen::VectorXd& ev = eig.eigenvalues();  // ascending
  const double largest = ev(ev.size() - 1);
  if (!(largest > 0.0)) return false;
  const double needed = ev(ev.size() - min_rank);
  return needed > kRankRelTol * kRankRelTol * largest;
}

void write_bytes(std::ofstream& out, Crc32* crc, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (crc != nullptr) crc->update(p, n);
}

void read_bytes(std::ifstream& in, Crc32* crc, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw IoError("dataset file truncated");
  }
  if (crc != nullptr) crc->update(p, n);
}

constexpr std::uint16_t kDatasetVersion = 1;

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kUrbanAnalog: return "urban_analog";
    case ScenarioKind::kRuralAnalog: return "rural_analog";
    case ScenarioKind::kIid: return "iid";
  }
  throw ConfigError("bad scenario kind");
}

ScenarioKind scenario_from_string(const std::string& name) {
  if (name == "urban" || name == "urban_analog") return ScenarioKind::kUrbanAnalog;
  if (name == "rural" || name == "rural_analog") return ScenarioKind::kRuralAnalog;
  if (name == "iid") return ScenarioKind::kIid;
  throw ConfigError("unknown scenario: " + name);
}

ScenarioConfig ScenarioConfig::urban(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::kUrbanAnalog;
  cfg.num_paths = 12;
  cfg.angular_spread_deg = 30.0;
  cfg.los_probability = 0.3;
  cfg.path_gain_decay = 0.9;
  cfg.seed = seed;
  return cfg;
}

ScenarioConfig ScenarioConfig::rural(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::kRuralAnalog;
  cfg.num_paths = 4;
  cfg.angular_spread_deg = 10.0;
  cfg.los_probability = 0.7;
  cfg.path_gain_decay = 0.7;
  cfg.seed = seed;
  return cfg;
}

ScenarioConfig ScenarioConfig::iid(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::kIid;
  cfg.seed = seed;
  return cfg;
}

void ScenarioConfig::validate() const {
  if (num_paths < 1) throw ConfigError("num_paths must be >= 1");
  if (!(angular_spread_deg > 0)) throw ConfigError("angular_spread_deg must be > 0");
  if (los_probability < 0 || los_probability > 1) {
    throw ConfigError("los_probability must be in [0, 1]");
  }
  if (!(path_gain_decay > 0)) throw ConfigError("path_gain_decay must be > 0");
  if (!(sigma2_min > 0) || !(sigma2_max > 0) || sigma2_min > sigma2_max) {
    throw ConfigError("need 0 < sigma2_min <= sigma2_max");
  }
}

Eigen::MatrixXcd draw_user_channel(const ScenarioConfig& cfg, Rng& rng) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(kRxAntennas, kTxAntennas);

  if (cfg.kind == ScenarioKind::kIid) {
    for (int r = 0; r < kRxAntennas; ++r) {
      for (int t = 0; t < kTxAntennas; ++t) {
        h(r, t) = rng.complex_gaussian();
      }
    }
    return h;
  }

  const double spread = cfg.angular_spread_deg * M_PI / 180.0;
  const double departure_center = rng.uniform(-M_PI / 3.0, M_PI / 3.0);
  const double arrival_center = rng.uniform(-M_PI / 3.0, M_PI / 3.0);
  const bool los = rng.bernoulli(cfg.los_probability);

  double total_var = 0.0;
  for (int p = 0; p < cfg.num_paths; ++p) {
    double var = std::pow(cfg.path_gain_decay, p);
    if (los && p == 0) var *= cfg.num_paths;  // dominant direct path
    total_var += var;

    const double dep = departure_center + spread * rng.gaussian();
    const double arr = arrival_center + spread * rng.gaussian();
    const std::complex<double> gain =
        rng.complex_gaussian() * std::sqrt(var);

    h.noalias() +=
        gain * steering(kRxAntennas, arr) * steering(kTxAntennas, dep).adjoint();
  }
  // Unit per-entry variance regardless of path count.
  h /= std::sqrt(total_var);
  return h;
}

ChannelObject generate_channel(const ScenarioConfig& cfg, int num_users,
                               std::uint64_t sample_index) {
  cfg.validate();
  if (num_users < 1) throw ConfigError("num_users must be >= 1");

  ChannelObject obj;
  obj.scenario_tag = to_string(cfg.kind);
  obj.users.reserve(num_users);

  Rng meta(cfg.seed, sample_index, 0);
  obj.sigma2 = meta.log_uniform(cfg.sigma2_min, cfg.sigma2_max);

  for (int k = 0; k < num_users; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt <= kMaxRankRetries; ++attempt) {
      Rng rng(cfg.seed, sample_index, user_stream(k, attempt));
      Eigen::MatrixXcd h = draw_user_channel(cfg, rng);
      if (has_min_rank(h, kLayersPerUser)) {
        obj.users.push_back(std::move(h));
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw GenerationError("rank-deficient channel for user " +
                            std::to_string(k) + " after " +
                            std::to_string(kMaxRankRetries) + " retries");
    }
  }
  return obj;
}

std::vector<ChannelObject> generate_dataset(const ScenarioConfig& cfg,
                                            std::size_t n, const KSpec& k_spec,
                                            std::uint64_t first_index) {
  if (n < 1) throw ConfigError("dataset size must be >= 1");
  if (k_spec.values.empty()) throw ConfigError("K spec must be nonempty");
  for (int k : k_spec.values) {
    if (k < 1) throw ConfigError("user counts must be >= 1");
  }

  std::vector<ChannelObject> objects;
  objects.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t index = first_index + i;
    int k = k_spec.values[0];
    if (k_spec.values.size() > 1) {
      Rng meta(cfg.seed, index, 0);
      meta.log_uniform(cfg.sigma2_min, cfg.sigma2_max);  // keep draw order
      k = k_spec.values[meta.uniform_index(k_spec.values.size())];
    }
    objects.push_back(generate_channel(cfg, k, index));
  }
  return objects;
}

// Layout: "SEDS" | u16 version | u64 N | u32 T | u32 R | u32 L_per_user |
// per object { u32 K | f64 sigma2 | u16 tag_len | tag bytes |
// row-major interleaved (re, im) f64 entries } | u32 CRC-32 of all object
// records. Little-endian throughout.
void save_dataset(const std::vector<ChannelObject>& objects,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path.string());

  out.write("SEDS", 4);
  const std::uint16_t version = kDatasetVersion;
  const std::uint64_t n = objects.size();
  const std::uint32_t t = kTxAntennas, r = kRxAntennas, l = kLayersPerUser;
  write_bytes(out, nullptr, &version, sizeof version);
  write_bytes(out, nullptr, &n, sizeof n);
  write_bytes(out, nullptr, &t, sizeof t);
  write_bytes(out, nullptr, &r, sizeof r);
  write_bytes(out, nullptr, &l, sizeof l);

  Crc32 crc;
  for (const ChannelObject& obj : objects) {
    const std::uint32_t k = static_cast<std::uint32_t>(obj.num_users());
    write_bytes(out, &crc, &k, sizeof k);
    write_bytes(out, &crc, &obj.sigma2, sizeof obj.sigma2);
    const std::uint16_t tag_len = static_cast<std::uint16_t>(obj.scenario_tag.size());
    write_bytes(out, &crc, &tag_len, sizeof tag_len);
    write_bytes(out, &crc, obj.scenario_tag.data(), tag_len);
    for (const Eigen::MatrixXcd& h : obj.users) {
      for (int row = 0; row < h.rows(); ++row) {
        for (int col = 0; col < h.cols(); ++col) {
          const double re = h(row, col).real();
          const double im = h(row, col).imag();
          write_bytes(out, &crc, &re, sizeof re);
          write_bytes(out, &crc, &im, sizeof im);
        }
      }
    }
  }
  const std::uint32_t checksum = crc.value();
  write_bytes(out, nullptr, &checksum, sizeof checksum);
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ChannelObject> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for read: " + path.string());

  char magic[4];
  read_bytes(in, nullptr, magic, 4);
  if (std::memcmp(magic, "SEDS", 4) != 0) throw IoError("bad dataset magic");
  std::uint16_t version;
  read_bytes(in, nullptr, &version, sizeof version);
  if (version != kDatasetVersion) {
    throw IoError("unsupported dataset version " + std::to_string(version));
  }
  std::uint64_t n;
  std::uint32_t t, r, l;
  read_bytes(in, nullptr, &n, sizeof n);
  read_bytes(in, nullptr, &t, sizeof t);
  read_bytes(in, nullptr, &r, sizeof r);
  read_bytes(in, nullptr, &l, sizeof l);
  if (t != kTxAntennas || r != kRxAntennas || l != kLayersPerUser) {
    throw IoError("dataset antenna geometry does not match this build");
  }

  Crc32 crc;
  std::vector<ChannelObject> objects;
  objects.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    ChannelObject obj;
    std::uint32_t k;
    read_bytes(in, &crc, &k, sizeof k);
    read_bytes(in, &crc, &obj.sigma2, sizeof obj.sigma2);
    std::uint16_t tag_len;
    read_bytes(in, &crc, &tag_len, sizeof tag_len);
    obj.scenario_tag.resize(tag_len);
    read_bytes(in, &crc, obj.scenario_tag.data(), tag_len);
    obj.users.reserve(k);
    for (std::uint32_t u = 0; u < k; ++u) {
      Eigen::MatrixXcd h(kRxAntennas, kTxAntennas);
      for (int row = 0; row < h.rows(); ++row) {
        for (int col = 0; col < h.cols(); ++col) {
          double re, im;
          read_bytes(in, &crc, &re, sizeof re);
          read_bytes(in, &crc, &im, sizeof im);
          h(row, col) = {re, im};
        }
      }
      obj.users.push_back(std::move(h));
    }
    objects.push_back(std::move(obj));
  }
  std::uint32_t stored;
  read_bytes(in, nullptr, &stored, sizeof stored);
  if (stored != crc.value()) throw IoError("dataset checksum mismatch");
  return objects;
}

}  // namespace sepred
