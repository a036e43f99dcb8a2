#include "sepred/metrics.hpp"

#include <cmath>

#include "sepred/errors.hpp"

namespace sepred {

double mape(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets) {
  if (predictions.size() != targets.size() || targets.size() == 0) {
    throw ConfigError("mape: prediction/target length mismatch");
  }
  double sum = 0.0;
  for (long i = 0; i < targets.size(); ++i) {
    if (targets(i) == 0.0) throw NumericError("mape: zero target");
    sum += std::abs((targets(i) - predictions(i)) / targets(i));
  }
  return sum / static_cast<double>(targets.size());
}

}  // namespace sepred
