#pragma once

#include <filesystem>
#include <variant>

#include "sepred/gbdt.hpp"
#include "sepred/linear.hpp"
#include "sepred/mlp.hpp"

namespace sepred {

using ModelVariant = std::variant<LinearModel, GbdtModel, MlpModel>;

// "SEML" container: magic, version, family tag, payload, CRC-32. Round trips
// are bit-exact.
void save_model(const ModelVariant& model, const std::filesystem::path& path);
ModelVariant load_model(const std::filesystem::path& path);

// Typed loads; throw IoError when the file holds a different family.
LinearModel load_linear_model(const std::filesystem::path& path);
GbdtModel load_gbdt_model(const std::filesystem::path& path);
MlpModel load_mlp_model(const std::filesystem::path& path);

Eigen::VectorXd predict(const ModelVariant& model,
                        const Eigen::MatrixXd& features);

}  // namespace sepred
