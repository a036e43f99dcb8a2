#pragma once

#include <Eigen/Dense>

namespace sepred {

// Mean absolute percentage error, mean_i |t_i - p_i| / |t_i|.
// Throws ConfigError on length mismatch, NumericError on a zero target.
double mape(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets);

}  // namespace sepred
