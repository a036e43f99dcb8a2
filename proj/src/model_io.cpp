#include "sepred/model_io.hpp"

#include <cstring>
#include <fstream>
#include <string>

#include "sepred/crc32.hpp"
#include "sepred/errors.hpp"

namespace sepred {
namespace {

constexpr std::uint16_t kModelVersion = 1;

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    buffer_.append(static_cast<const char*>(p), n);
  }
  void u8(std::uint8_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void vec(const Eigen::VectorXd& v) {
    u64(v.size());
    raw(v.data(), sizeof(double) * v.size());
  }
  void mat(const Eigen::MatrixXd& m) {
    u64(m.rows());
    u64(m.cols());
    raw(m.data(), sizeof(double) * m.size());
  }
  void ints(const std::vector<int>& v) {
    u64(v.size());
    for (int x : v) u32(static_cast<std::uint32_t>(x));
  }
  const std::string& data() const { return buffer_; }

 private:
  std::string buffer_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  void raw(void* p, std::size_t n) {
    if (pos_ + n > data_.size()) throw IoError("model payload truncated");
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() { std::uint8_t v; raw(&v, sizeof v); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
  double f64() { double v; raw(&v, sizeof v); return v; }
  Eigen::VectorXd vec() {
    Eigen::VectorXd v(static_cast<long>(u64()));
    raw(v.data(), sizeof(double) * v.size());
    return v;
  }
  Eigen::MatrixXd mat() {
    const long rows = static_cast<long>(u64());
    const long cols = static_cast<long>(u64());
    Eigen::MatrixXd m(rows, cols);
    raw(m.data(), sizeof(double) * m.size());
    return m;
  }
  std::vector<int> ints() {
    std::vector<int> v(u64());
    for (auto& x : v) x = static_cast<int>(u32());
    return v;
  }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

void write_norm(Writer& w, const NormalizationStats& norm) {
  w.vec(norm.feature_mean);
  w.vec(norm.feature_std);
  w.ints(norm.kept);
  w.ints(norm.dropped);
  w.f64(norm.target_mean);
  w.f64(norm.target_std);
}

NormalizationStats read_norm(Reader& r) {
  NormalizationStats norm;
  norm.feature_mean = r.vec();
  norm.feature_std = r.vec();
  norm.kept = r.ints();
  norm.dropped = r.ints();
  norm.target_mean = r.f64();
  norm.target_std = r.f64();
  return norm;
}

void serialize(Writer& w, const LinearModel& m) {
  w.vec(m.weights);
  w.f64(m.bias);
  w.f64(m.l1_strength);
}

void serialize(Writer& w, const GbdtModel& m) {
  w.f64(m.base_prediction);
  w.u32(static_cast<std::uint32_t>(m.num_features));
  w.u32(static_cast<std::uint32_t>(m.params.iterations));
  w.u32(static_cast<std::uint32_t>(m.params.depth));
  w.f64(m.params.learning_rate);
  w.f64(m.params.subsample);
  w.f64(m.params.l2_leaf_reg);
  w.u32(static_cast<std::uint32_t>(m.params.border_count));
  w.u32(static_cast<std::uint32_t>(m.params.min_data_in_leaf));
  w.u64(m.params.seed);
  w.u64(m.trees.size());
  for (const GbdtTree& tree : m.trees) {
    w.u64(tree.nodes.size());
    for (const GbdtNode& node : tree.nodes) {
      w.u32(static_cast<std::uint32_t>(node.feature + 1));
      w.f64(node.threshold);
      w.u32(static_cast<std::uint32_t>(node.left + 1));
      w.u32(static_cast<std::uint32_t>(node.right + 1));
      w.f64(node.value);
    }
  }
}

void serialize(Writer& w, const MlpModel& m) {
  w.u64(m.weights.size());
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    w.mat(m.weights[l]);
    w.vec(m.biases[l]);
  }
  w.f64(m.dropout_rate);
  w.f64(m.weight_decay);
  w.u8(m.has_norm ? 1 : 0);
  if (m.has_norm) write_norm(w, m.norm);
}

LinearModel read_linear(Reader& r) {
  LinearModel m;
  m.weights = r.vec();
  m.bias = r.f64();
  m.l1_strength = r.f64();
  return m;
}

GbdtModel read_gbdt(Reader& r) {
  GbdtModel m;
  m.base_prediction = r.f64();
  m.num_features = static_cast<int>(r.u32());
  m.params.iterations = static_cast<int>(r.u32());
  m.params.depth = static_cast<int>(r.u32());
  m.params.learning_rate = r.f64();
  m.params.subsample = r.f64();
  m.params.l2_leaf_reg = r.f64();
  m.params.border_count = static_cast<int>(r.u32());
  m.params.min_data_in_leaf = static_cast<int>(r.u32());
  m.params.seed = r.u64();
  m.trees.resize(r.u64());
  for (GbdtTree& tree : m.trees) {
    tree.nodes.resize(r.u64());
    for (GbdtNode& node : tree.nodes) {
      node.feature = static_cast<int>(r.u32()) - 1;
      node.threshold = r.f64();
      node.left = static_cast<int>(r.u32()) - 1;
      node.right = static_cast<int>(r.u32()) - 1;
      node.value = r.f64();
    }
  }
  return m;
}

MlpModel read_mlp(Reader& r) {
  MlpModel m;
  const std::uint64_t layers = r.u64();
  for (std::uint64_t l = 0; l < layers; ++l) {
    m.weights.push_back(r.mat());
    m.biases.push_back(r.vec());
  }
  m.dropout_rate = r.f64();
  m.weight_decay = r.f64();
  m.has_norm = r.u8() != 0;
  if (m.has_norm) m.norm = read_norm(r);
  return m;
}

std::uint8_t family_tag(const ModelVariant& model) {
  return static_cast<std::uint8_t>(model.index());
}

}  // namespace

void save_model(const ModelVariant& model, const std::filesystem::path& path) {
  Writer payload;
  std::visit([&payload](const auto& m) { serialize(payload, m); }, model);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path.string());
  out.write("SEML", 4);
  const std::uint16_t version = kModelVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  const std::uint8_t family = family_tag(model);
  out.write(reinterpret_cast<const char*>(&family), sizeof family);
  const std::uint64_t size = payload.data().size();
  out.write(reinterpret_cast<const char*>(&size), sizeof size);
  out.write(payload.data().data(), static_cast<std::streamsize>(size));
  const std::uint32_t crc = Crc32::of(payload.data().data(), size);
  out.write(reinterpret_cast<const char*>(&crc), sizeof crc);
  if (!out) throw IoError("write failed: " + path.string());
}

ModelVariant load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for read: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "SEML", 4) != 0) {
    throw IoError("bad model magic");
  }
  std::uint16_t version;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!in || version != kModelVersion) {
    throw IoError("unsupported model version");
  }
  std::uint8_t family;
  in.read(reinterpret_cast<char*>(&family), sizeof family);
  std::uint64_t size;
  in.read(reinterpret_cast<char*>(&size), sizeof size);
  if (!in) throw IoError("model header truncated");
  std::string payload(size, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(size));
  if (in.gcount() != static_cast<std::streamsize>(size)) {
    throw IoError("model payload truncated");
  }
  std::uint32_t stored;
  in.read(reinterpret_cast<char*>(&stored), sizeof stored);
  if (!in || stored != Crc32::of(payload.data(), payload.size())) {
    throw IoError("model checksum mismatch");
  }

  Reader r(std::move(payload));
  switch (family) {
    case 0: return read_linear(r);
    case 1: return read_gbdt(r);
    case 2: return read_mlp(r);
    default: throw IoError("unknown model family tag");
  }
}

LinearModel load_linear_model(const std::filesystem::path& path) {
  ModelVariant v = load_model(path);
  if (auto* m = std::get_if<LinearModel>(&v)) return std::move(*m);
  throw IoError("model file does not hold a linear model");
}

GbdtModel load_gbdt_model(const std::filesystem::path& path) {
  ModelVariant v = load_model(path);
  if (auto* m = std::get_if<GbdtModel>(&v)) return std::move(*m);
  throw IoError("model file does not hold a gbdt model");
}

MlpModel load_mlp_model(const std::filesystem::path& path) {
  ModelVariant v = load_model(path);
  if (auto* m = std::get_if<MlpModel>(&v)) return std::move(*m);
  throw IoError("model file does not hold an mlp model");
}

Eigen::VectorXd predict(const ModelVariant& model,
                        const Eigen::MatrixXd& features) {
  if (const auto* m = std::get_if<LinearModel>(&model)) {
    return predict_linear(*m, features);
  }
  if (const auto* m = std::get_if<GbdtModel>(&model)) {
    return predict_gbdt(*m, features);
  }
  return predict_mlp(std::get<MlpModel>(model), features);
}

}  // namespace sepred
