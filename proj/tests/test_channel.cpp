#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <complex>
#include <filesystem>
#include <fstream>
#include <map>

#include "sepred/channel.hpp"
#include "sepred/errors.hpp"

using namespace sepred;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / name;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("iid entries match complex gaussian moments") {
  const ScenarioConfig cfg = ScenarioConfig::iid(123);
  const int draws = 10000;

  std::complex<double> mean = 0.0;
  double second_moment = 0.0;
  long count = 0;
  for (int i = 0; i < draws; ++i) {
    const ChannelObject obj = generate_channel(cfg, 1, i);
    mean += obj.users[0].sum();
    second_moment += obj.users[0].squaredNorm();
    count += obj.users[0].size();
  }
  mean /= static_cast<double>(count);
  second_moment /= static_cast<double>(count);

  CHECK(std::abs(mean) < 0.05);
  const double variance = second_moment - std::norm(mean);
  CHECK(variance == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("iid entry covariance is near identity on a coordinate subset") {
  // Spot-check a 16-entry slice of the vectorized channel: unit diagonal,
  // vanishing off-diagonal correlation.
  const ScenarioConfig cfg = ScenarioConfig::iid(5);
  const int draws = 10000, dim = 16;
  Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i < draws; ++i) {
    const ChannelObject obj = generate_channel(cfg, 1, i);
    Eigen::VectorXcd v(dim);
    for (int j = 0; j < dim; ++j) v(j) = obj.users[0](j % 4, 7 * j % 64);
    cov += v * v.adjoint();
  }
  cov /= static_cast<double>(draws);
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      if (a == b) {
        CHECK(cov(a, a).real() == doctest::Approx(1.0).epsilon(0.10));
      } else {
        CHECK(std::abs(cov(a, b)) < 0.10);
      }
    }
  }
}

TEST_CASE("generation is deterministic in (config, seed, index)") {
  for (const ScenarioConfig& cfg :
       {ScenarioConfig::urban(9), ScenarioConfig::rural(9), ScenarioConfig::iid(9)}) {
    const ChannelObject a = generate_channel(cfg, 4, 7);
    const ChannelObject b = generate_channel(cfg, 4, 7);
    REQUIRE(a.num_users() == 4);
    CHECK(a.sigma2 == b.sigma2);
    for (int k = 0; k < 4; ++k) {
      CHECK(a.users[k] == b.users[k]);  // bit-identical
    }
  }
}

TEST_CASE("different indices and seeds give different channels") {
  const ScenarioConfig cfg = ScenarioConfig::urban(3);
  const ChannelObject a = generate_channel(cfg, 2, 0);
  const ChannelObject b = generate_channel(cfg, 2, 1);
  CHECK(a.users[0] != b.users[0]);
  const ChannelObject c = generate_channel(ScenarioConfig::urban(4), 2, 0);
  CHECK(a.users[0] != c.users[0]);
}

TEST_CASE("single-path geometric draw is rank one") {
  ScenarioConfig cfg = ScenarioConfig::urban(11);
  cfg.num_paths = 1;
  cfg.los_probability = 0.0;

  Rng rng(cfg.seed, 0, 1);
  const Eigen::MatrixXcd h = draw_user_channel(cfg, rng);
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
  REQUIRE(svd.singularValues()(0) > 0);
  CHECK(svd.singularValues()(1) < 1e-7 * svd.singularValues()(0));
}

TEST_CASE("rank repair gives up after the retry budget on a rank-one scenario") {
  ScenarioConfig cfg = ScenarioConfig::urban(11);
  cfg.num_paths = 1;  // every retry draws another rank-1 outer product
  cfg.los_probability = 0.0;
  CHECK_THROWS_AS(generate_channel(cfg, 1, 0), GenerationError);
}

TEST_CASE("generated objects satisfy rank and shape invariants") {
  for (const ScenarioConfig& cfg :
       {ScenarioConfig::urban(21), ScenarioConfig::rural(22)}) {
    const auto objects = generate_dataset(cfg, 20, KSpec::fixed(3));
    for (const ChannelObject& obj : objects) {
      REQUIRE(obj.num_users() == 3);
      CHECK(obj.sigma2 >= cfg.sigma2_min);
      CHECK(obj.sigma2 <= cfg.sigma2_max);
      for (const auto& h : obj.users) {
        REQUIRE(h.rows() == kRxAntennas);
        REQUIRE(h.cols() == kTxAntennas);
        const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
        CHECK(svd.singularValues()(kLayersPerUser - 1) > 0);
      }
    }
  }
}

TEST_CASE("fixed-K dataset has uniform user count") {
  const auto objects = generate_dataset(ScenarioConfig::iid(1), 100, KSpec::fixed(4));
  REQUIRE(objects.size() == 100);
  for (const auto& obj : objects) CHECK(obj.num_users() == 4);
}

TEST_CASE("mixed-K sampling is close to uniform") {
  const auto objects =
      generate_dataset(ScenarioConfig::iid(42), 3000, KSpec::mixed({2, 4, 8}));
  std::map<int, int> counts;
  for (const auto& obj : objects) ++counts[obj.num_users()];
  REQUIRE(counts.size() == 3);
  for (int k : {2, 4, 8}) {
    CHECK(counts[k] >= 800);
    CHECK(counts[k] <= 1200);
  }
}

TEST_CASE("dataset offsets reproduce the same objects") {
  const ScenarioConfig cfg = ScenarioConfig::rural(17);
  const auto base = generate_dataset(cfg, 6, KSpec::fixed(2), 0);
  const auto shifted = generate_dataset(cfg, 3, KSpec::fixed(2), 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(base[3 + i].users[0] == shifted[i].users[0]);
    CHECK(base[3 + i].sigma2 == shifted[i].sigma2);
  }
}

TEST_CASE("empty dataset or K spec is rejected") {
  CHECK_THROWS_AS(generate_dataset(ScenarioConfig::iid(0), 0, KSpec::fixed(2)),
                  ConfigError);
  CHECK_THROWS_AS(generate_dataset(ScenarioConfig::iid(0), 1, KSpec{{}}),
                  ConfigError);
  CHECK_THROWS_AS(generate_channel(ScenarioConfig::iid(0), 0, 0), ConfigError);
}

TEST_CASE("scenario validation rejects bad noise ranges") {
  ScenarioConfig cfg = ScenarioConfig::urban(0);
  cfg.sigma2_min = 0.5;
  cfg.sigma2_max = 0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.sigma2_min = 0.0;
  cfg.sigma2_max = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("dataset save/load round trip is bit exact") {
  const auto objects =
      generate_dataset(ScenarioConfig::urban(31), 10, KSpec::mixed({2, 4}));
  const fs::path path = temp_file("sepred_roundtrip.seds");
  save_dataset(objects, path);
  const auto loaded = load_dataset(path);

  REQUIRE(loaded.size() == objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i) {
    CHECK(loaded[i].sigma2 == objects[i].sigma2);
    CHECK(loaded[i].scenario_tag == objects[i].scenario_tag);
    REQUIRE(loaded[i].num_users() == objects[i].num_users());
    for (int k = 0; k < objects[i].num_users(); ++k) {
      CHECK(loaded[i].users[k] == objects[i].users[k]);
    }
  }
  fs::remove(path);
}

TEST_CASE("truncated dataset file fails to load") {
  const auto objects = generate_dataset(ScenarioConfig::iid(2), 3, KSpec::fixed(2));
  const fs::path path = temp_file("sepred_trunc.seds");
  save_dataset(objects, path);
  std::string bytes = slurp(path);
  dump(path, bytes.substr(0, bytes.size() - 10));
  CHECK_THROWS_AS(load_dataset(path), IoError);
  fs::remove(path);
}

TEST_CASE("corrupted dataset payload fails the checksum") {
  const auto objects = generate_dataset(ScenarioConfig::iid(2), 3, KSpec::fixed(2));
  const fs::path path = temp_file("sepred_corrupt.seds");
  save_dataset(objects, path);
  std::string bytes = slurp(path);
  bytes[bytes.size() / 2] ^= 0x01;
  dump(path, bytes);
  CHECK_THROWS_AS(load_dataset(path), IoError);
  fs::remove(path);
}

TEST_CASE("unknown dataset version is rejected") {
  const auto objects = generate_dataset(ScenarioConfig::iid(2), 1, KSpec::fixed(1));
  const fs::path path = temp_file("sepred_version.seds");
  save_dataset(objects, path);
  std::string bytes = slurp(path);
  bytes[4] = static_cast<char>(0xFF);  // version u16 follows the magic
  dump(path, bytes);
  CHECK_THROWS_AS(load_dataset(path), IoError);
  fs::remove(path);
}
